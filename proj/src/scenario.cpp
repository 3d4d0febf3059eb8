#include "medloc/scenario.hpp"

#include <httplib.h>
#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "medloc/api_server.hpp"
#include "medloc/error.hpp"
#include "medloc/serialization.hpp"

namespace medloc {

using nlohmann::json;

namespace {

const std::set<std::string> kActions = {
    "submit_prescription", "update_prescription", "cancel_prescription", "request_availability",
    "get_request",         "list_requests",       "cancel_request",      "pharmacy_inbox",
    "respond",             "notifications",       "mark_read",           "nearby",
    "autocomplete",        "wait",                "http"};

const std::string kAnonymous = "anonymous";

std::size_t line_of(const YAML::Node& n) { return static_cast<std::size_t>(n.Mark().line + 1); }

// Plain scalars get YAML's usual typing; quoted ones stay strings.
json to_json_value(const YAML::Node& n) {
    switch (n.Type()) {
        case YAML::NodeType::Null:
        case YAML::NodeType::Undefined:
            return nullptr;
        case YAML::NodeType::Sequence: {
            json a = json::array();
            for (const auto& item : n) a.push_back(to_json_value(item));
            return a;
        }
        case YAML::NodeType::Map: {
            json o = json::object();
            for (const auto& kv : n) o[kv.first.as<std::string>()] = to_json_value(kv.second);
            return o;
        }
        case YAML::NodeType::Scalar:
            break;
    }
    const std::string& s = n.Scalar();
    if (n.Tag() == "!") return s;
    if (s == "true" || s == "True") return true;
    if (s == "false" || s == "False") return false;
    if (s == "null" || s == "~") return nullptr;
    const char* end = s.data() + s.size();
    std::int64_t i = 0;
    if (auto [p, ec] = std::from_chars(s.data(), end, i); ec == std::errc{} && p == end && !s.empty()) return i;
    double d = 0.0;
    if (auto [p, ec] = std::from_chars(s.data(), end, d); ec == std::errc{} && p == end && !s.empty()) return d;
    return s;
}

std::string scalar(const YAML::Node& map, const char* key, const std::string& source, bool required = true) {
    const auto n = map[key];
    if (!n) {
        if (required) throw ParseError(source, line_of(map), std::string("missing '") + key + "'");
        return {};
    }
    if (!n.IsScalar()) throw ParseError(source, line_of(n), std::string("'") + key + "' must be a scalar");
    return n.Scalar();
}

double number(const YAML::Node& map, const char* key, const std::string& source) {
    const auto text = scalar(map, key, source);
    double v = 0.0;
    const char* end = text.data() + text.size();
    auto [p, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || p != end) throw ParseError(source, line_of(map[key]), std::string("'") + key + "' is not a number");
    return v;
}

ScenarioWorld parse_world(const YAML::Node& node, const std::string& source) {
    ScenarioWorld w;
    if (!node) return w;
    if (!node.IsMap()) throw ParseError(source, line_of(node), "'world' must be a mapping");
    std::set<MedicineId> medicine_ids;
    if (const auto meds = node["medicines"]) {
        for (const auto& m : meds) {
            Medicine med{scalar(m, "id", source), scalar(m, "name", source), scalar(m, "dosage", source, false),
                         scalar(m, "package", source, false)};
            if (!medicine_ids.insert(med.id).second)
                throw ParseError(source, line_of(m), "duplicate medicine id '" + med.id + "'");
            w.medicines.push_back(std::move(med));
        }
    }
    std::set<PharmacyId> pharmacy_ids;
    if (const auto phs = node["pharmacies"]) {
        for (const auto& p : phs) {
            ScenarioPharmacy sp;
            sp.pharmacy.id = scalar(p, "id", source);
            sp.pharmacy.name = scalar(p, "name", source);
            sp.pharmacy.contact = scalar(p, "contact", source, false);
            const auto lat = number(p, "lat", source);
            const auto lon = number(p, "lon", source);
            try {
                sp.pharmacy.location = GeoPoint(lat, lon);
            } catch (const ValidationError& e) {
                throw ValidationError(source + ":" + std::to_string(line_of(p)) + ": pharmacy '" + sp.pharmacy.id +
                                      "': " + e.what());
            }
            if (const auto r = p["registered"]) sp.pharmacy.registered = r.as<bool>();
            if (const auto stock = p["stock"]) {
                for (const auto& s : stock) {
                    const auto id = s.as<std::string>();
                    if (!medicine_ids.count(id))
                        throw ParseError(source, line_of(s), "stock names unknown medicine '" + id + "'");
                    sp.stock.insert(id);
                }
            }
            if (!pharmacy_ids.insert(sp.pharmacy.id).second)
                throw ParseError(source, line_of(p), "duplicate pharmacy id '" + sp.pharmacy.id + "'");
            w.pharmacies.push_back(std::move(sp));
        }
    }
    std::set<std::string> names;
    if (const auto users = node["users"]) {
        for (const auto& u : users) {
            ScenarioUser su;
            su.name = scalar(u, "name", source);
            su.session.token = scalar(u, "token", source);
            try {
                su.session.role = parse_role(scalar(u, "role", source));
            } catch (const Error& e) {
                throw ParseError(source, line_of(u), e.what());
            }
            su.session.principal = scalar(u, "principal", source, false);
            if (su.session.principal.empty()) su.session.principal = su.name;
            if (su.name == kAnonymous) throw ParseError(source, line_of(u), "'anonymous' is reserved");
            if (!names.insert(su.name).second) throw ParseError(source, line_of(u), "duplicate user '" + su.name + "'");
            w.users.push_back(std::move(su));
        }
    }
    return w;
}

ScenarioStep parse_step(const YAML::Node& n, const ScenarioWorld& world, const std::string& source) {
    if (!n.IsMap()) throw ParseError(source, line_of(n), "step must be a mapping");
    ScenarioStep s;
    s.line = line_of(n);
    try {
        s.at = parse_duration(scalar(n, "at", source));
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError(source, s.line, std::string("bad 'at': ") + e.what());
    }
    s.action = scalar(n, "action", source);
    if (!kActions.count(s.action)) throw ParseError(source, s.line, "unknown action '" + s.action + "'");
    s.actor = scalar(n, "actor", source, s.action != "wait");
    if (!s.actor.empty() && s.actor != kAnonymous && !world.user(s.actor))
        throw ParseError(source, s.line, "actor '" + s.actor + "' is not declared in world.users");
    if (const auto p = n["params"]) {
        s.params = to_json_value(p);
        if (!s.params.is_object()) throw ParseError(source, line_of(p), "'params' must be a mapping");
    }
    if (const auto save = n["save"]) {
        if (!save.IsMap()) throw ParseError(source, line_of(save), "'save' must be a mapping");
        for (const auto& kv : save) s.save[kv.first.as<std::string>()] = kv.second.as<std::string>();
    }
    if (const auto e = n["expect"]) {
        if (!e.IsMap()) throw ParseError(source, line_of(e), "'expect' must be a mapping");
        if (const auto st = e["status"]) s.expect_status = st.as<int>();
        if (const auto j = e["json"]) {
            if (!j.IsMap()) throw ParseError(source, line_of(j), "'expect.json' must be a mapping");
            for (const auto& kv : j) s.expect_json.emplace_back(kv.first.as<std::string>(), to_json_value(kv.second));
        }
    }
    return s;
}

std::string format_offset(Duration d) {
    const auto ms = d.count();
    char buf[32];
    std::snprintf(buf, sizeof buf, "+%02lld:%02lld:%02lld.%03lld", static_cast<long long>(ms / 3600000),
                  static_cast<long long>(ms / 60000 % 60), static_cast<long long>(ms / 1000 % 60),
                  static_cast<long long>(ms % 1000));
    return buf;
}

bool json_matches(const json& actual, const json& expected) {
    if (actual.is_number() && expected.is_number()) {
        const double a = actual.get<double>(), e = expected.get<double>();
        return std::fabs(a - e) <= 1e-9 * std::max(1.0, std::fabs(e));
    }
    if (actual.is_array() && expected.is_array()) {
        if (actual.size() != expected.size()) return false;
        for (std::size_t i = 0; i < actual.size(); ++i)
            if (!json_matches(actual[i], expected[i])) return false;
        return true;
    }
    if (actual.is_object() && expected.is_object()) {
        if (actual.size() != expected.size()) return false;
        for (auto it = expected.begin(); it != expected.end(); ++it)
            if (!actual.contains(it.key()) || !json_matches(actual[it.key()], it.value())) return false;
        return true;
    }
    return actual == expected;
}

class Driver {
public:
    Driver(const Scenario& scenario, const std::string& base_url, const RunOptions& options)
        : scenario_(scenario), client_(base_url), options_(options) {
        client_.set_connection_timeout(5);
        client_.set_read_timeout(30);
        auto res = client_.Get("/health");
        if (!res) throw Error("cannot reach server at " + base_url + ": " + httplib::to_string(res.error()));
        auto clock = client_.Get("/admin/clock");
        if (!clock || clock->status != 200)
            throw Error("server at " + base_url + " is not in virtual-clock mode");
        last_sequence_ = latest_sequence();
    }

    ScenarioResult run() {
        ScenarioResult result;
        result.name = scenario_.name;
        Duration elapsed{0};
        for (std::size_t i = 0; i < scenario_.steps.size(); ++i) {
            const auto& step = scenario_.steps[i];
            StepOutcome out;
            out.index = i + 1;
            out.line = step.line;
            out.at = step.at;
            out.actor = step.actor;
            out.action = step.action;
            if (step.at > elapsed) {
                const double seconds = static_cast<double>((step.at - elapsed).count()) / 1000.0;
                exchange(out, "POST", "/admin/advance-clock", "", json{{"seconds", seconds}});
                elapsed = step.at;
            }
            try {
                perform(step, out);
            } catch (const std::exception& e) {
                out.failures.push_back(e.what());
            }
            for (const auto& ev : events_since()) out.events.push_back(ev);
            if (options_.check_replay) {
                auto res = client_.Get("/admin/consistency");
                if (!res || res->status != 200) {
                    out.failures.push_back("consistency endpoint unavailable");
                } else if (!json::parse(res->body).at("consistent").get<bool>()) {
                    out.failures.push_back("live state differs from replay of the log: " + res->body);
                }
            }
            result.assertion_count += assertions_;
            result.failed_assertions += out.failures.size();
            assertions_ = 0;
            result.steps.push_back(std::move(out));
        }
        return result;
    }

private:
    std::string token_for(const std::string& actor) const {
        if (actor.empty() || actor == kAnonymous) return {};
        return scenario_.world.user(actor)->session.token;
    }

    // Performs one HTTP exchange and records it.
    json exchange(StepOutcome& out, const std::string& method, const std::string& path, const std::string& token,
                  const std::optional<json>& body = std::nullopt) {
        httplib::Headers headers;
        if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
        const std::string payload = body ? body->dump() : std::string();
        httplib::Result res;
        if (method == "GET")
            res = client_.Get(path, headers);
        else if (method == "POST")
            res = client_.Post(path, headers, payload, "application/json");
        else if (method == "PUT")
            res = client_.Put(path, headers, payload, "application/json");
        else if (method == "DELETE")
            res = client_.Delete(path, headers);
        else
            throw Error("unsupported method " + method);
        if (!res) throw Error("request " + method + " " + path + " failed: " + httplib::to_string(res.error()));
        json parsed;
        try {
            parsed = res->body.empty() ? json(nullptr) : json::parse(res->body);
        } catch (const json::exception&) {
            parsed = res->body;
        }
        json record{{"method", method}, {"path", path}, {"status", res->status}, {"response", parsed}};
        if (body) record["body"] = *body;
        out.exchanges.push_back(record);
        last_status_ = res->status;
        return parsed;
    }

    json resolve(const std::string& expr) const {
        const auto dot = expr.find('.');
        const auto name = expr.substr(0, dot);
        auto it = vars_.find(name);
        if (it == vars_.end()) throw Error("undefined variable '" + name + "'");
        if (dot == std::string::npos) return it->second;
        auto v = json_at(it->second, expr.substr(dot + 1));
        if (!v) throw Error("variable path '" + expr + "' not found");
        return *v;
    }

    json interpolate(const json& v) const {
        if (v.is_string()) {
            const auto& s = v.get_ref<const std::string&>();
            if (s.size() > 3 && s.rfind("${", 0) == 0 && s.back() == '}' && s.find("${", 2) == std::string::npos)
                return resolve(s.substr(2, s.size() - 3));
            std::string out;
            std::size_t pos = 0;
            while (true) {
                const auto open = s.find("${", pos);
                if (open == std::string::npos) break;
                const auto close = s.find('}', open);
                if (close == std::string::npos) break;
                out += s.substr(pos, open - pos);
                const auto value = resolve(s.substr(open + 2, close - open - 2));
                out += value.is_string() ? value.get<std::string>() : value.dump();
                pos = close + 1;
            }
            return out + s.substr(pos);
        }
        if (v.is_array()) {
            json a = json::array();
            for (const auto& x : v) a.push_back(interpolate(x));
            return a;
        }
        if (v.is_object()) {
            json o = json::object();
            for (auto it = v.begin(); it != v.end(); ++it) o[it.key()] = interpolate(it.value());
            return o;
        }
        return v;
    }

    static std::string required(const json& params, const char* key) {
        auto it = params.find(key);
        if (it == params.end()) throw Error(std::string("params.") + key + " is required");
        return it->is_string() ? it->get<std::string>() : it->dump();
    }

    static std::string query(const json& params, std::initializer_list<const char*> keys) {
        std::string q;
        for (const char* k : keys) {
            auto it = params.find(k);
            if (it == params.end()) continue;
            const auto text = it->is_string() ? it->get<std::string>() : it->dump();
            q += (q.empty() ? "?" : "&") + std::string(k) + "=" + httplib::detail::encode_query_param(text);
        }
        return q;
    }

    void perform(const ScenarioStep& step, StepOutcome& out) {
        const json params = interpolate(step.params);
        const auto token = token_for(step.actor);
        const auto& a = step.action;
        json body = params;
        auto without = [&](std::initializer_list<const char*> keys) {
            json b = params;
            for (const char* k : keys) b.erase(k);
            return b;
        };
        json response;
        bool exchanged = true;
        if (a == "submit_prescription") {
            response = exchange(out, "POST", "/prescriptions", token, params);
        } else if (a == "update_prescription") {
            response = exchange(out, "PUT", "/prescriptions/" + required(params, "prescription_id"), token,
                                without({"prescription_id"}));
        } else if (a == "cancel_prescription") {
            response = exchange(out, "POST", "/prescriptions/" + required(params, "prescription_id") + "/cancel", token);
        } else if (a == "request_availability") {
            response = exchange(out, "POST", "/prescriptions/" + required(params, "prescription_id") + "/availability",
                                token, without({"prescription_id"}));
        } else if (a == "get_request") {
            response = exchange(out, "GET", "/requests/" + required(params, "request_id"), token);
        } else if (a == "list_requests") {
            response = exchange(out, "GET", "/requests", token);
        } else if (a == "cancel_request") {
            response = exchange(out, "POST", "/requests/" + required(params, "request_id") + "/cancel", token);
        } else if (a == "pharmacy_inbox") {
            response = exchange(out, "GET", "/pharmacy/inbox", token);
        } else if (a == "respond") {
            const auto id = required(params, "request_id");
            json b = without({"request_id", "from_stock"});
            if (params.value("from_stock", false)) {
                // Tick the boxes for whatever this pharmacy stocks.
                const auto* user = scenario_.world.user(step.actor);
                const auto* pharmacy = scenario_.world.pharmacy(user->session.principal);
                if (!pharmacy) throw Error("actor '" + step.actor + "' has no pharmacy in the world");
                const auto inbox = exchange(out, "GET", "/pharmacy/inbox", token);
                json available = json::array();
                bool found = false;
                for (const auto& item : inbox) {
                    if (item.value("request_id", "") != id) continue;
                    found = true;
                    for (const auto& line : item.at("lines")) {
                        const auto mid = line.at("medicine_id").get<std::string>();
                        if (pharmacy->stock.count(mid)) available.push_back(mid);
                    }
                }
                if (!found) throw Error("request " + id + " is not in the inbox of " + pharmacy->pharmacy.id);
                b["available_medicine_ids"] = available;
            }
            response = exchange(out, "POST", "/pharmacy/requests/" + id + "/response", token, b);
        } else if (a == "notifications") {
            response = exchange(out, "GET", "/notifications" + query(params, {"unread_only"}), token);
        } else if (a == "mark_read") {
            response = exchange(out, "POST", "/notifications/read", token, params);
        } else if (a == "nearby") {
            response = exchange(out, "GET", "/pharmacies/nearby" + query(params, {"lat", "lon", "radius_km"}), token);
        } else if (a == "autocomplete") {
            response = exchange(out, "GET", "/medicines/autocomplete" + query(params, {"q", "limit"}), token);
        } else if (a == "http") {
            std::optional<json> b;
            if (params.contains("body")) b = params.at("body");
            response = exchange(out, params.value("method", "GET"), required(params, "path"), token, b);
        } else {
            exchanged = false;  // wait: the clock advance above is the whole step
        }
        body = response;

        if (exchanged) {
            ++assertions_;
            if (step.expect_status) {
                if (last_status_ != *step.expect_status)
                    out.failures.push_back("expected status " + std::to_string(*step.expect_status) + ", got " +
                                           std::to_string(last_status_));
            } else if (last_status_ < 200 || last_status_ >= 300) {
                out.failures.push_back("expected a 2xx status, got " + std::to_string(last_status_));
            }
        }
        for (const auto& [path, expected] : step.expect_json) {
            ++assertions_;
            const auto want = interpolate(expected);
            const auto got = json_at(body, path);
            if (!got) {
                out.failures.push_back("path '" + path + "' missing, expected " + want.dump());
            } else if (!json_matches(*got, want)) {
                out.failures.push_back("path '" + path + "': expected " + want.dump() + ", got " + got->dump());
            }
        }
        for (const auto& [name, path] : step.save) {
            auto v = json_at(body, path);
            if (!v) {
                out.failures.push_back("cannot save '" + name + "': path '" + path + "' missing");
                continue;
            }
            vars_[name] = *v;
        }
    }

    std::uint64_t latest_sequence() {
        std::uint64_t last = 0;
        for (const auto& e : fetch_events(0)) last = std::max(last, e.at("sequence").get<std::uint64_t>());
        return last;
    }

    json fetch_events(std::uint64_t after) {
        auto res = client_.Get("/admin/events?after=" + std::to_string(after));
        if (!res || res->status != 200) throw Error("event feed unavailable");
        return json::parse(res->body);
    }

    json events_since() {
        auto evs = fetch_events(last_sequence_);
        for (const auto& e : evs) last_sequence_ = std::max(last_sequence_, e.at("sequence").get<std::uint64_t>());
        return evs;
    }

    const Scenario& scenario_;
    httplib::Client client_;
    RunOptions options_;
    std::map<std::string, json> vars_;
    std::uint64_t last_sequence_ = 0;
    int last_status_ = 0;
    std::size_t assertions_ = 0;
};

std::filesystem::path scratch_dir() {
    std::random_device rd;
    std::mt19937_64 gen(rd());
    for (int attempt = 0; attempt < 16; ++attempt) {
        auto dir = std::filesystem::temp_directory_path() / ("medloc-scenario-" + std::to_string(gen()));
        if (std::filesystem::create_directory(dir)) return dir;
    }
    throw Error("cannot create a scratch directory");
}

}  // namespace

World ScenarioWorld::to_world() const {
    World w;
    w.medicines = medicines;
    for (const auto& p : pharmacies) w.pharmacies.push_back(p.pharmacy);
    for (const auto& u : users) w.sessions.push_back(u.session);
    return w;
}

const ScenarioUser* ScenarioWorld::user(const std::string& name) const {
    for (const auto& u : users)
        if (u.name == name) return &u;
    return nullptr;
}

const ScenarioPharmacy* ScenarioWorld::pharmacy(const PharmacyId& id) const {
    for (const auto& p : pharmacies)
        if (p.pharmacy.id == id) return &p;
    return nullptr;
}

Scenario parse_scenario(const std::string& text, const std::string& source) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ParseError(source, static_cast<std::size_t>(e.mark.line + 1), e.msg);
    }
    if (!root.IsMap()) throw ParseError(source, 1, "scenario must be a mapping");
    Scenario s;
    s.source = source;
    s.name = scalar(root, "name", source);
    s.description = scalar(root, "description", source, false);
    s.world = parse_world(root["world"], source);
    if (const auto steps = root["steps"]) {
        if (!steps.IsSequence()) throw ParseError(source, line_of(steps), "'steps' must be a list");
        for (const auto& n : steps) {
            auto step = parse_step(n, s.world, source);
            if (!s.steps.empty() && step.at < s.steps.back().at)
                throw ParseError(source, step.line,
                                 "step at " + format_offset(step.at) + " comes before the previous step at " +
                                     format_offset(s.steps.back().at));
            s.steps.push_back(std::move(step));
        }
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open scenario " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_scenario(text.str(), path.string());
}

std::optional<json> json_at(const json& doc, const std::string& path) {
    const json* cur = &doc;
    if (path.empty()) return *cur;
    std::size_t pos = 0;
    while (pos <= path.size()) {
        const auto dot = path.find('.', pos);
        const auto seg = path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        if (seg == "#") {
            if (dot != std::string::npos) return std::nullopt;
            if (!cur->is_array() && !cur->is_object() && !cur->is_string()) return std::nullopt;
            return cur->is_string() ? json(cur->get_ref<const std::string&>().size()) : json(cur->size());
        }
        if (cur->is_array()) {
            std::size_t idx = 0;
            auto [p, ec] = std::from_chars(seg.data(), seg.data() + seg.size(), idx);
            if (ec != std::errc{} || p != seg.data() + seg.size() || idx >= cur->size()) return std::nullopt;
            cur = &(*cur)[idx];
        } else if (cur->is_object()) {
            auto it = cur->find(seg);
            if (it == cur->end()) return std::nullopt;
            cur = &*it;
        } else {
            return std::nullopt;
        }
        if (dot == std::string::npos) break;
        pos = dot + 1;
    }
    return *cur;
}

SeedReport seed_scenario(const Scenario& scenario, const std::filesystem::path& data_dir) {
    if (!Store::is_empty(data_dir)) throw ConflictError("data directory " + data_dir.string() + " is not empty");
    Store store(data_dir);
    const auto world = scenario.world.to_world();
    seed_world(store, world);
    return {world.pharmacies.size(), world.medicines.size(), world.sessions.size()};
}

bool ScenarioResult::passed() const {
    if (!failures.empty()) return false;
    for (const auto& s : steps)
        if (!s.passed()) return false;
    return true;
}

json ScenarioResult::transcript() const {
    json steps_json = json::array();
    for (const auto& s : steps) {
        steps_json.push_back({{"index", s.index},
                              {"line", s.line},
                              {"at", format_offset(s.at)},
                              {"actor", s.actor},
                              {"action", s.action},
                              {"exchanges", s.exchanges},
                              {"events", s.events},
                              {"passed", s.passed()},
                              {"failures", s.failures}});
    }
    return {{"scenario", name},
            {"passed", passed()},
            {"assertions", assertion_count},
            {"failed_assertions", failed_assertions},
            {"failures", failures},
            {"steps", steps_json}};
}

ScenarioResult run_scenario(const Scenario& scenario, const std::string& base_url, const RunOptions& options) {
    Driver driver(scenario, base_url, options);
    return driver.run();
}

EmbeddedServer::EmbeddedServer(const Scenario& scenario, std::optional<std::filesystem::path> data_dir) {
    if (data_dir) {
        dir_ = *data_dir;
    } else {
        dir_ = scratch_dir();
        owns_dir_ = true;
    }
    seed_scenario(scenario, dir_);
    store_ = std::make_unique<Store>(dir_);
    broker_ = std::make_unique<Broker>(*store_, clock_);
    ApiOptions options;
    options.virtual_clock = &clock_;
    server_ = std::make_unique<ApiServer>(*broker_, options);
    server_->start("127.0.0.1", 0);
}

EmbeddedServer::~EmbeddedServer() {
    server_.reset();
    broker_.reset();
    store_.reset();
    if (owns_dir_) {
        std::error_code ec;
        std::filesystem::remove_all(dir_, ec);
    }
}

std::string EmbeddedServer::base_url() const { return server_->base_url(); }

std::vector<RequestId> EmbeddedServer::compare_with_fresh_replay() const {
    // Restart from a copy of the directory, as a crash-free restart would.
    const auto copy = scratch_dir();
    std::filesystem::copy(dir_, copy, std::filesystem::copy_options::recursive |
                                          std::filesystem::copy_options::overwrite_existing);
    std::vector<RequestId> differ;
    {
        VirtualClock clock(clock_.now());
        Store store(copy);
        Broker fresh(store, clock);
        std::set<RequestId> ids;
        for (const auto& id : broker_->request_ids()) ids.insert(id);
        for (const auto& id : fresh.request_ids()) ids.insert(id);
        for (const auto& id : ids)
            if (broker_->find_request(id) != fresh.find_request(id)) differ.push_back(id);
        if (broker_->notifier().all() != fresh.notifier().all()) differ.push_back("<notifications>");
    }
    std::error_code ec;
    std::filesystem::remove_all(copy, ec);
    return differ;
}

ScenarioResult run_embedded(const Scenario& scenario, const RunOptions& options) {
    EmbeddedServer server(scenario);
    auto result = run_scenario(scenario, server.base_url(), options);
    if (options.check_replay) {
        for (const auto& id : server.compare_with_fresh_replay())
            result.failures.push_back("restart from disk differs for " + id);
    }
    return result;
}

}  // namespace medloc
