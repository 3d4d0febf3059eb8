#include "medloc/api_server.hpp"

#include <httplib.h>

#include <algorithm>
#include <charconv>
#include <cmath>

#include "medloc/error.hpp"
#include "medloc/serialization.hpp"

namespace medloc {

namespace {

using nlohmann::json;

struct HttpError {
    int status;
    std::string code;
    std::string message;
};

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
    send_json(res, status, json{{"error", {{"code", code}, {"message", message}}}});
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        auto j = json::parse(req.body);
        if (!j.is_object()) throw HttpError{400, "validation_error", "request body must be a JSON object"};
        return j;
    } catch (const json::parse_error& e) {
        throw HttpError{400, "validation_error", std::string("malformed JSON: ") + e.what()};
    }
}

double number_param(const httplib::Request& req, const std::string& name, std::optional<double> fallback) {
    if (!req.has_param(name)) {
        if (fallback) return *fallback;
        throw HttpError{400, "validation_error", "missing query parameter '" + name + "'"};
    }
    const auto text = req.get_param_value(name);
    double v = 0.0;
    const auto* end = text.data() + text.size();
    auto [p, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || p != end || !std::isfinite(v))
        throw HttpError{400, "validation_error", "query parameter '" + name + "' is not a number"};
    return v;
}

double number_field(const json& body, const std::string& name) {
    auto it = body.find(name);
    if (it == body.end() || !it->is_number())
        throw HttpError{400, "validation_error", "field '" + name + "' must be a number"};
    return it->get<double>();
}

std::string bearer_token(const httplib::Request& req) {
    const auto header = req.get_header_value("Authorization");
    constexpr std::string_view prefix = "Bearer ";
    if (header.size() <= prefix.size() || header.compare(0, prefix.size(), prefix) != 0) return {};
    return header.substr(prefix.size());
}

std::string_view status_of(const AvailabilityRequest& r, const PharmacyId& id) {
    auto it = r.responses.find(id);
    if (it == r.responses.end()) return "no_response";
    return to_string(it->second.verdict);
}

json pharmacy_summary(const Broker& broker, const AvailabilityRequest& r, const Enquiry& e) {
    json j{{"pharmacy_id", e.pharmacy_id},
           {"distance_km", e.distance_km},
           {"round", e.round},
           {"status", status_of(r, e.pharmacy_id)}};
    if (const auto* p = broker.registry().snapshot()->find(e.pharmacy_id)) {
        j["name"] = p->name;
        j["contact"] = p->contact;
        j["lat"] = p->location.latitude();
        j["lon"] = p->location.longitude();
    }
    if (auto it = r.responses.find(e.pharmacy_id); it != r.responses.end()) {
        j["available_medicine_ids"] = it->second.available_medicine_ids;
        j["responded_at"] = format_timestamp(it->second.responded_at);
    }
    return j;
}

// Patient-facing view: per-pharmacy status, the rounds so far and the
// recommendation.
json request_view(const Broker& broker, const AvailabilityRequest& r) {
    std::vector<Enquiry> enquiries;
    for (const auto& [id, e] : r.enquired) enquiries.push_back(e);
    std::sort(enquiries.begin(), enquiries.end(), [](const Enquiry& a, const Enquiry& b) {
        return std::tie(a.round, a.distance_km, a.pharmacy_id) < std::tie(b.round, b.distance_km, b.pharmacy_id);
    });
    json enquired = json::array();
    for (const auto& e : enquiries) enquired.push_back(pharmacy_summary(broker, r, e));

    json rounds = json::array();
    for (int k = 1; k <= r.round; ++k)
        rounds.push_back({{"round", k}, {"radius_km", r.config.radius_for_round(k)}, {"dispatched", r.dispatched_in_round(k)}});

    json best = nullptr;
    if (auto b = best_pharmacy(r)) {
        best = {{"pharmacy_id", b->pharmacy_id},
                {"verdict", to_string(b->verdict)},
                {"distance_km", b->distance_km},
                {"available_count", b->available_count}};
        if (const auto* p = broker.registry().snapshot()->find(b->pharmacy_id)) {
            best["name"] = p->name;
            best["contact"] = p->contact;
        }
    }
    return {{"request_id", r.id},
            {"prescription_id", r.prescription_id},
            {"state", to_string(r.state)},
            {"round", r.round},
            {"radius_km", r.current_radius_km},
            {"origin", r.origin},
            {"medicine_ids", r.medicine_ids},
            {"config", r.config},
            {"opened_at", format_timestamp(r.opened_at)},
            {"round_deadline", format_timestamp(r.round_deadline)},
            {"enquired", enquired},
            {"rounds", rounds},
            {"best", best},
            {"late_responses", r.audit_responses}};
}

json inbox_view(const Broker& broker, const PharmacyId& pharmacy, const InboxItem& item) {
    const auto& r = item.request;
    json lines = json::array();
    for (const auto& l : item.prescription.lines) {
        json line{{"medicine_id", l.medicine_id}, {"quantity", l.quantity}};
        if (const auto* m = broker.catalog().find(l.medicine_id)) {
            line["name"] = m->name;
            line["dosage"] = m->dosage;
            line["package"] = m->package;
        }
        lines.push_back(std::move(line));
    }
    const auto& e = r.enquired.at(pharmacy);
    return {{"request_id", r.id},
            {"prescription_id", r.prescription_id},
            {"state", to_string(r.state)},
            {"round", e.round},
            {"distance_km", e.distance_km},
            {"round_deadline", format_timestamp(r.round_deadline)},
            {"lines", lines}};
}

std::vector<PrescriptionLine> lines_from(const json& body) {
    auto it = body.find("lines");
    if (it == body.end() || !it->is_array()) throw HttpError{400, "validation_error", "field 'lines' must be an array"};
    try {
        return it->get<std::vector<PrescriptionLine>>();
    } catch (const json::exception& e) {
        throw HttpError{400, "validation_error", std::string("bad prescription line: ") + e.what()};
    }
}

std::string sse_frame(const Notification& n) {
    return "id: " + std::to_string(n.id) + "\nevent: notification\ndata: " + json(n).dump() + "\n\n";
}

}  // namespace

ApiServer::ApiServer(Broker& broker, ApiOptions options)
    : broker_(broker), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
    install_routes();
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::start(const std::string& host, int port) {
    host_ = host;
    if (port == 0) {
        port_ = server_->bind_to_any_port(host);
    } else {
        port_ = server_->bind_to_port(host, port) ? port : -1;
    }
    if (port_ <= 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port_;
}

void ApiServer::listen(const std::string& host, int port) {
    host_ = host;
    if (!server_->bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
    port_ = port;
    server_->listen_after_bind();
}

void ApiServer::stop() {
    if (stopping_.exchange(true)) return;
    {
        std::lock_guard lock(streams_mutex_);
        for (auto& w : streams_)
            if (auto s = w.lock()) s->close();
    }
    server_->stop();
    if (thread_.joinable()) thread_.join();
}

std::string ApiServer::base_url() const { return "http://" + host_ + ":" + std::to_string(port_); }

void ApiServer::install_routes() {
    auto& svr = *server_;

    svr.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const HttpError& e) {
            send_error(res, e.status, e.code, e.message);
        } catch (const ValidationError& e) {
            send_error(res, 400, "validation_error", e.what());
        } catch (const DomainError& e) {
            send_error(res, 400, "validation_error", e.what());
        } catch (const ParseError& e) {
            send_error(res, 400, "validation_error", e.what());
        } catch (const NotFoundError& e) {
            send_error(res, 404, "not_found", e.what());
        } catch (const ForbiddenError& e) {
            send_error(res, 403, "forbidden", e.what());
        } catch (const ConflictError& e) {
            send_error(res, 409, "conflict", e.what());
        } catch (const InvalidTransition& e) {
            send_error(res, 409, "conflict", e.what());
        } catch (const json::exception& e) {
            send_error(res, 400, "validation_error", e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "internal", e.what());
        }
    });
    svr.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    svr.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Authorization, Content-Type, Idempotency-Key, Last-Event-ID");
        res.status = 204;
    });
    if (!options_.static_dir.empty()) svr.set_mount_point("/", options_.static_dir);

    // Authentication. Throws 401 for an unknown token and 403 for the wrong
    // role; an empty role list admits either.
    auto auth = [this](const httplib::Request& req, std::optional<Role> role) {
        const auto token = bearer_token(req);
        if (token.empty()) throw HttpError{401, "unauthorized", "missing bearer token"};
        auto session = broker_.authenticate(token);
        if (!session) throw HttpError{401, "unauthorized", "unknown token"};
        if (role && session->role != *role)
            throw HttpError{403, "forbidden", std::string("requires role ") + std::string(to_string(*role))};
        return *session;
    };

    svr.Get("/health", [](const httplib::Request&, httplib::Response& res) { send_json(res, 200, {{"status", "ok"}}); });

    // Public lookups.
    svr.Get("/pharmacies/nearby", [this](const httplib::Request& req, httplib::Response& res) {
        const double lat = number_param(req, "lat", std::nullopt);
        const double lon = number_param(req, "lon", std::nullopt);
        const double radius = number_param(req, "radius_km", broker_.default_config().initial_radius_km);
        if (radius <= 0.0) throw HttpError{400, "validation_error", "radius_km must be positive"};
        json out = json::array();
        for (const auto& r : broker_.registry().within_radius(GeoPoint(lat, lon), radius))
            out.push_back({{"pharmacy", r.pharmacy}, {"distance_km", r.distance_km}});
        send_json(res, 200, out);
    });

    svr.Get("/medicines/autocomplete", [this](const httplib::Request& req, httplib::Response& res) {
        const double limit = number_param(req, "limit", 10.0);
        if (limit < 1.0 || limit != std::floor(limit))
            throw HttpError{400, "validation_error", "limit must be a positive integer"};
        send_json(res, 200, json(broker_.catalog().autocomplete(req.get_param_value("q"), static_cast<std::size_t>(limit))));
    });

    // Patient: prescriptions.
    svr.Post("/prescriptions", [this, auth](const httplib::Request& req, httplib::Response& res) {
        const auto session = auth(req, Role::patient);
        const auto key = req.get_header_value("Idempotency-Key");
        std::unique_lock<std::mutex> idem;
        if (!key.empty()) {
            idem = std::unique_lock(idempotency_mutex_);
            auto it = idempotent_replies_.find({session.principal, key});
            if (it != idempotent_replies_.end()) {
                res.status = it->second.first;
                res.set_content(it->second.second, "application/json");
                return;
            }
        }
        const auto body = parse_body(req);
        const auto p = broker_.submit_prescription(session.principal, lines_from(body));
        send_json(res, 201, json(p));
        if (!key.empty()) idempotent_replies_[{session.principal, key}] = {res.status, res.body};
    });

    svr.Get("/prescriptions", [this, auth](const httplib::Request& req, httplib::Response& res) {
        const auto session = auth(req, Role::patient);
        send_json(res, 200, json(broker_.list_prescriptions(session.principal)));
    });

    svr.Get("/prescriptions/:id", [this, auth](const httplib::Request& req, httplib::Response& res) {
        const auto session = auth(req, Role::patient);
        send_json(res, 200, json(broker_.get_prescription(session.principal, req.path_params.at("id"))));
    });

    svr.Put("/prescriptions/:id", [this, auth](const httplib::Request& req, httplib::Response& res) {
        const auto session = auth(req, Role::patient);
        const auto body = parse_body(req);
        send_json(res, 200,
                  json(broker_.update_prescription(session.principal, req.path_params.at("id"), lines_from(body))));
    });

    svr.Post("/prescriptions/:id/cancel", [this, auth](const httplib::Request& req, httplib::Response& res) {
        const auto session = auth(req, Role::patient);
        send_json(res, 200, json(broker_.cancel_prescription(session.principal, req.path_params.at("id"))));
    });

    // Patient: availability requests.
    svr.Post("/prescriptions/:id/availability", [this, auth](const httplib::Request& req, httplib::Response& res) {
        const auto session = auth(req, Role::patient);
        const auto body = parse_body(req);
        const GeoPoint origin(number_field(body, "lat"), number_field(body, "lon"));
        json overrides = json::object();
        if (auto it = body.find("config"); it != body.end()) {
            if (!it->is_object()) throw HttpError{400, "validation_error", "field 'config' must be an object"};
            overrides = *it;
        }
        const auto r = broker_.request_availability(session.principal, req.path_params.at("id"), origin, overrides);
        send_json(res, 202, request_view(broker_, r));
    });

    svr.Get("/requests", [this, auth](const httplib::Request& req, httplib::Response& res) {
        const auto session = auth(req, Role::patient);
        json out = json::array();
        for (const auto& r : broker_.list_requests(session.principal)) out.push_back(request_view(broker_, r));
        send_json(res, 200, out);
    });

    svr.Get("/requests/:id", [this, auth](const httplib::Request& req, httplib::Response& res) {
        const auto session = auth(req, Role::patient);
        send_json(res, 200, request_view(broker_, broker_.get_request(session.principal, req.path_params.at("id"))));
    });

    svr.Post("/requests/:id/cancel", [this, auth](const httplib::Request& req, httplib::Response& res) {
        const auto session = auth(req, Role::patient);
        send_json(res, 200, request_view(broker_, broker_.cancel_request(session.principal, req.path_params.at("id"))));
    });

    // Pharmacist.
    svr.Get("/pharmacy/inbox", [this, auth](const httplib::Request& req, httplib::Response& res) {
        const auto session = auth(req, Role::pharmacist);
        json out = json::array();
        for (const auto& item : broker_.pharmacy_inbox(session.principal))
            out.push_back(inbox_view(broker_, session.principal, item));
        send_json(res, 200, out);
    });

    svr.Post("/pharmacy/requests/:id/response", [this, auth](const httplib::Request& req, httplib::Response& res) {
        const auto session = auth(req, Role::pharmacist);
        const auto body = parse_body(req);
        ResponseInput input;
        if (auto it = body.find("verdict"); it != body.end()) {
            if (!it->is_string()) throw HttpError{400, "validation_error", "field 'verdict' must be a string"};
            input.verdict = parse_verdict(it->get<std::string>());
        }
        if (auto it = body.find("available_medicine_ids"); it != body.end()) {
            if (!it->is_array()) throw HttpError{400, "validation_error", "field 'available_medicine_ids' must be an array"};
            input.available_medicine_ids = it->get<std::set<MedicineId>>();
        }
        if (!input.verdict && !input.available_medicine_ids)
            throw HttpError{400, "validation_error", "give 'verdict' or 'available_medicine_ids'"};
        const auto id = req.path_params.at("id");
        const auto r = broker_.respond(session.principal, id, input);
        const auto& answer = r.responses.count(session.principal) ? r.responses.at(session.principal)
                                                                   : r.audit_responses.back();
        send_json(res, 200,
                  {{"request_id", id},
                   {"pharmacy_id", session.principal},
                   {"verdict", to_string(answer.verdict)},
                   {"available_medicine_ids", answer.available_medicine_ids},
                   {"state", to_string(r.state)}});
    });

    // Notifications, either role.
    svr.Get("/notifications", [this, auth](const httplib::Request& req, httplib::Response& res) {
        const auto session = auth(req, std::nullopt);
        const auto flag = req.get_param_value("unread_only");
        const bool unread_only = flag == "true" || flag == "1";
        send_json(res, 200, json(broker_.notifier().list(session.principal, unread_only)));
    });

    svr.Post("/notifications/read", [this, auth](const httplib::Request& req, httplib::Response& res) {
        const auto session = auth(req, std::nullopt);
        const auto body = parse_body(req);
        auto it = body.find("ids");
        if (it == body.end() || !it->is_array()) throw HttpError{400, "validation_error", "field 'ids' must be an array"};
        const auto n = broker_.notifier().mark_read(session.principal, it->get<std::vector<NotificationId>>());
        send_json(res, 200, {{"updated", n}});
    });

    // Server-sent events. A reconnect that names the last id it saw gets the
    // backlog replayed first.
    svr.Get("/notifications/stream", [this, auth](const httplib::Request& req, httplib::Response& res) {
        const auto session = auth(req, std::nullopt);
        std::string last = req.get_header_value("Last-Event-ID");
        if (last.empty()) last = req.get_param_value("last_event_id");
        auto sub = broker_.notifier().subscribe(session.principal);
        {
            std::lock_guard lock(streams_mutex_);
            std::erase_if(streams_, [](const auto& w) { return w.expired(); });
            streams_.push_back(sub);
        }
        std::vector<Notification> backlog;
        NotificationId last_sent = 0;
        if (!last.empty()) {
            try {
                last_sent = std::stoull(last);
            } catch (const std::exception&) {
                throw HttpError{400, "validation_error", "bad Last-Event-ID"};
            }
            backlog = broker_.notifier().since(session.principal, last_sent);
        }
        struct StreamState {
            std::vector<Notification> backlog;
            NotificationId last_sent;
            bool opened = false;
        };
        auto state = std::make_shared<StreamState>(StreamState{std::move(backlog), last_sent});
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider(
            "text/event-stream",
            [this, sub, state](std::size_t, httplib::DataSink& sink) {
                auto write = [&](const std::string& s) { return sink.write(s.data(), s.size()); };
                if (!state->opened) {
                    state->opened = true;
                    if (!write(": connected\n\n")) return false;
                    for (const auto& n : state->backlog) {
                        if (!write(sse_frame(n))) return false;
                        state->last_sent = std::max(state->last_sent, n.id);
                    }
                    state->backlog.clear();
                    return true;
                }
                if (stopping_ || sub->closed()) {
                    sink.done();
                    return true;
                }
                auto batch = sub->wait(options_.heartbeat_interval);
                if (stopping_ || sub->closed()) {
                    sink.done();
                    return true;
                }
                if (batch.empty()) return write(": heartbeat\n\n");
                for (const auto& n : batch) {
                    if (n.id <= state->last_sent) continue;
                    if (!write(sse_frame(n))) return false;
                    state->last_sent = n.id;
                }
                return true;
            },
            [sub](bool) { sub->close(); });
    });

    // Virtual-clock administration for tests and the scenario harness.
    if (options_.virtual_clock) {
        svr.Post("/admin/advance-clock", [this](const httplib::Request& req, httplib::Response& res) {
            const auto body = parse_body(req);
            const double seconds = number_field(body, "seconds");
            if (seconds < 0.0) throw HttpError{400, "validation_error", "seconds must be non-negative"};
            auto& clock = *options_.virtual_clock;
            const auto target = clock.now() + Duration(static_cast<std::int64_t>(std::llround(seconds * 1000.0)));
            // Step through each deadline on the way so a long jump behaves
            // like a driver that never sleeps through a round.
            std::size_t ticked = 0;
            while (auto next = broker_.next_deadline()) {
                if (*next > target) break;
                if (*next > clock.now()) clock.set(*next);
                const auto n = broker_.tick_all();
                ticked += n;
                if (n == 0) break;
            }
            clock.set(target);
            ticked += broker_.tick_all();
            send_json(res, 200, {{"now", format_timestamp(clock.now())}, {"ticked", ticked}});
        });

        svr.Get("/admin/clock", [this](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, {{"now", format_timestamp(options_.virtual_clock->now())}});
        });

        svr.Get("/admin/events", [this](const httplib::Request& req, httplib::Response& res) {
            const double after = number_param(req, "after", 0.0);
            json out = json::array();
            for (const auto& e : EventLog::read_file(broker_.store().log().path()))
                if (static_cast<double>(e.sequence) > after) out.push_back(e);
            send_json(res, 200, out);
        });

        svr.Get("/admin/consistency", [this](const httplib::Request&, httplib::Response& res) {
            const auto bad = broker_.verify_against_log();
            send_json(res, 200, {{"consistent", bad.empty()}, {"mismatched", bad}});
        });
    }
}

TickDriver::TickDriver(Broker& broker, std::chrono::milliseconds period)
    : broker_(broker), period_(period), thread_([this] {
          std::unique_lock lock(mutex_);
          while (!stop_) {
              cv_.wait_for(lock, period_, [this] { return stop_; });
              if (stop_) break;
              lock.unlock();
              try {
                  broker_.tick_all();
              } catch (const std::exception&) {
                  // A failed tick is retried on the next period.
              }
              lock.lock();
          }
      }) {}

TickDriver::~TickDriver() {
    {
        std::lock_guard lock(mutex_);
        stop_ = true;
    }
    cv_.notify_all();
    thread_.join();
}

}  // namespace medloc
