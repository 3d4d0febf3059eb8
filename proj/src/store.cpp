#include "medloc/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "medloc/error.hpp"
#include "medloc/serialization.hpp"

namespace medloc {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void io_failure(const std::string& what, const fs::path& p) {
    throw Error(what + " " + p.string() + ": " + std::strerror(errno));
}

void fsync_dir(const fs::path& dir) {
    const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
    if (fd < 0) return;
    ::fsync(fd);
    ::close(fd);
}

}  // namespace

EventLog::EventLog(fs::path file) : path_(std::move(file)) {
    if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
    load();
    fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) io_failure("cannot open event log", path_);
}

EventLog::~EventLog() {
    if (fd_ >= 0) ::close(fd_);
}

void EventLog::load() {
    std::ifstream in(path_, std::ios::binary);
    if (!in) return;
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    std::size_t pos = 0;
    std::size_t lineno = 0;
    std::size_t good_bytes = 0;
    while (pos < content.size()) {
        const auto nl = content.find('\n', pos);
        ++lineno;
        if (nl == std::string::npos) break;  // torn tail: no newline, never acknowledged
        const std::string line = content.substr(pos, nl - pos);
        pos = nl + 1;
        if (line.empty()) {
            good_bytes = pos;
            continue;
        }
        RequestEvent e;
        try {
            e = nlohmann::json::parse(line).get<RequestEvent>();
        } catch (const std::exception& err) {
            if (pos >= content.size()) break;  // a damaged final line is a torn write too
            throw ParseError(path_.string(), lineno, err.what());
        }
        if (e.sequence < next_sequence_)
            throw ParseError(path_.string(), lineno, "sequence " + std::to_string(e.sequence) + " out of order");
        const auto it = folded_.find(e.request_id);
        try {
            auto next = apply_event(it == folded_.end() ? std::nullopt : std::optional(it->second), e);
            folded_.insert_or_assign(e.request_id, std::move(next));
        } catch (const InvalidTrace& err) {
            throw ParseError(path_.string(), lineno, err.what());
        }
        next_sequence_ = e.sequence + 1;
        by_key_.emplace(std::pair{e.request_id, e.dedup_key()}, e.sequence);
        by_request_[e.request_id].push_back(events_.size());
        events_.push_back(std::move(e));
        good_bytes = pos;
    }
    if (good_bytes < content.size()) fs::resize_file(path_, good_bytes);
}

void EventLog::write_line(const std::string& line) {
    std::size_t off = 0;
    while (off < line.size()) {
        const auto n = ::write(fd_, line.data() + off, line.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            io_failure("cannot append to", path_);
        }
        off += static_cast<std::size_t>(n);
    }
    if (::fsync(fd_) != 0) io_failure("cannot sync", path_);
}

std::uint64_t EventLog::append(RequestEvent event) {
    return append_batch({std::move(event)}).front();
}

std::vector<std::uint64_t> EventLog::append_batch(std::vector<RequestEvent> batch) {
    std::lock_guard lock(mutex_);
    std::vector<std::uint64_t> sequences(batch.size(), 0);
    std::map<RequestId, AvailabilityRequest> staged;
    std::string payload;
    std::uint64_t seq = next_sequence_;
    std::vector<std::size_t> fresh;
    std::map<std::pair<RequestId, std::string>, std::uint64_t> staged_keys;

    for (std::size_t i = 0; i < batch.size(); ++i) {
        auto& e = batch[i];
        std::pair key{e.request_id, e.dedup_key()};
        if (const auto it = by_key_.find(key); it != by_key_.end()) {
            sequences[i] = it->second;
            continue;
        }
        if (const auto it = staged_keys.find(key); it != staged_keys.end()) {
            sequences[i] = it->second;
            continue;
        }
        std::optional<AvailabilityRequest> current;
        if (const auto s = staged.find(e.request_id); s != staged.end())
            current = s->second;
        else if (const auto f = folded_.find(e.request_id); f != folded_.end())
            current = f->second;
        staged.insert_or_assign(e.request_id, apply_event(current, e));
        e.sequence = seq++;
        sequences[i] = e.sequence;
        staged_keys.emplace(std::move(key), e.sequence);
        payload += nlohmann::json(e).dump();
        payload += '\n';
        fresh.push_back(i);
    }
    if (fresh.empty()) return sequences;

    write_line(payload);
    for (const auto i : fresh) {
        auto& e = batch[i];
        by_key_.emplace(std::pair{e.request_id, e.dedup_key()}, e.sequence);
        by_request_[e.request_id].push_back(events_.size());
        events_.push_back(std::move(e));
    }
    for (auto& [id, r] : staged) folded_.insert_or_assign(id, std::move(r));
    next_sequence_ = seq;
    return sequences;
}

std::vector<RequestEvent> EventLog::events_for(const RequestId& id) const {
    std::lock_guard lock(mutex_);
    std::vector<RequestEvent> out;
    if (const auto it = by_request_.find(id); it != by_request_.end())
        for (const auto idx : it->second) out.push_back(events_[idx]);
    return out;
}

std::vector<RequestId> EventLog::request_ids() const {
    std::lock_guard lock(mutex_);
    std::vector<RequestId> out;
    for (const auto& [id, idx] : by_request_) out.push_back(id);
    return out;
}

std::size_t EventLog::size() const {
    std::lock_guard lock(mutex_);
    return events_.size();
}

std::uint64_t EventLog::last_sequence() const {
    std::lock_guard lock(mutex_);
    return next_sequence_ - 1;
}

AvailabilityRequest EventLog::replay(const RequestId& id) const {
    const auto trace = events_for(id);
    if (trace.empty()) throw NotFoundError("no events for request " + id);
    return fold_events(trace);
}

std::vector<RequestEvent> EventLog::read_file(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    std::vector<RequestEvent> out;
    if (!in) return out;
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    std::size_t lineno = 0;
    while (pos < content.size()) {
        const auto nl = content.find('\n', pos);
        ++lineno;
        if (nl == std::string::npos) break;
        const std::string line = content.substr(pos, nl - pos);
        pos = nl + 1;
        if (line.empty()) continue;
        try {
            out.push_back(nlohmann::json::parse(line).get<RequestEvent>());
        } catch (const std::exception& err) {
            if (pos >= content.size()) break;
            throw ParseError(file.string(), lineno, err.what());
        }
    }
    return out;
}

std::string_view to_string(EntityKind k) noexcept {
    switch (k) {
        case EntityKind::pharmacies: return "pharmacies";
        case EntityKind::medicines: return "medicines";
        case EntityKind::prescriptions: return "prescriptions";
        case EntityKind::sessions: return "sessions";
        case EntityKind::notifications: return "notifications";
    }
    return "pharmacies";
}

EntityKind parse_entity_kind(std::string_view s) {
    for (auto k : {EntityKind::pharmacies, EntityKind::medicines, EntityKind::prescriptions, EntityKind::sessions,
                   EntityKind::notifications})
        if (to_string(k) == s) return k;
    throw NotFoundError("unknown entity kind '" + std::string(s) + "'");
}

namespace {

template <typename T>
void check_records(const nlohmann::json& records, std::string_view kind) {
    std::size_t i = 0;
    try {
        for (; i < records.size(); ++i) (void)records[i].get<T>();
    } catch (const Error& e) {
        throw ValidationError(std::string(kind) + "[" + std::to_string(i) + "]: " + e.what());
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string(kind) + "[" + std::to_string(i) + "]: " + e.what());
    }
}

}  // namespace

EntityStore::EntityStore(fs::path dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
}

std::size_t EntityStore::save_entities(EntityKind kind, const nlohmann::json& records) {
    if (!records.is_array()) throw ValidationError("records must be a JSON array");
    switch (kind) {
        case EntityKind::pharmacies: check_records<Pharmacy>(records, to_string(kind)); break;
        case EntityKind::medicines: check_records<Medicine>(records, to_string(kind)); break;
        case EntityKind::prescriptions: check_records<Prescription>(records, to_string(kind)); break;
        case EntityKind::sessions: check_records<ApiSession>(records, to_string(kind)); break;
        case EntityKind::notifications: check_records<Notification>(records, to_string(kind)); break;
    }
    std::lock_guard lock(mutex_);
    const auto target = dir_ / (std::string(to_string(kind)) + ".json");
    const auto tmp = dir_ / (std::string(to_string(kind)) + ".json.tmp");
    {
        const std::string text = records.dump(2) + "\n";
        const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
        if (fd < 0) io_failure("cannot write", tmp);
        std::size_t off = 0;
        while (off < text.size()) {
            const auto n = ::write(fd, text.data() + off, text.size() - off);
            if (n < 0) {
                if (errno == EINTR) continue;
                ::close(fd);
                io_failure("cannot write", tmp);
            }
            off += static_cast<std::size_t>(n);
        }
        ::fsync(fd);
        ::close(fd);
    }
    fs::rename(tmp, target);
    fsync_dir(dir_);
    return records.size();
}

nlohmann::json EntityStore::load_entities(EntityKind kind) const {
    std::lock_guard lock(mutex_);
    const auto path = dir_ / (std::string(to_string(kind)) + ".json");
    std::ifstream in(path);
    if (!in) return nlohmann::json::array();
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error("corrupt entity file " + path.string() + ": " + e.what());
    }
}

namespace {

fs::path prepared(const fs::path& dir) {
    fs::create_directories(dir);
    return dir;
}

}  // namespace

Store::Store(const fs::path& dir)
    : dir_(prepared(dir)), log_(dir_ / "events.jsonl"), entities_(dir_ / "entities") {}

bool Store::is_empty(const fs::path& dir) {
    if (!fs::exists(dir)) return true;
    if (fs::exists(dir / "events.jsonl") && fs::file_size(dir / "events.jsonl") > 0) return false;
    if (fs::exists(dir / "entities"))
        for (const auto& entry : fs::directory_iterator(dir / "entities"))
            if (entry.path().extension() == ".json") return false;
    return true;
}

std::string format_trace(const std::vector<RequestEvent>& trace) {
    std::ostringstream out;
    for (const auto& e : trace) {
        out << '#' << e.sequence << ' ' << format_timestamp(e.at) << ' ' << e.kind();
        struct Visitor {
            std::ostringstream& out;
            void operator()(const events::Opened& o) const {
                out << " prescription=" << o.prescription_id << " owner=" << o.owner_id << " origin=("
                    << o.origin.latitude() << ", " << o.origin.longitude() << ") medicines=[";
                bool first = true;
                for (const auto& m : o.medicine_ids) {
                    out << (first ? "" : ",") << m;
                    first = false;
                }
                out << "] radius=" << o.config.initial_radius_km << "km";
            }
            void operator()(const events::Dispatched& d) const {
                out << " round=" << d.round << " to=[";
                bool first = true;
                for (const auto& t : d.targets) {
                    out << (first ? "" : ", ") << t.pharmacy_id << " (" << t.distance_km << " km)";
                    first = false;
                }
                out << ']';
            }
            void operator()(const events::ResponseRecorded& r) const {
                out << " pharmacy=" << r.response.pharmacy_id << " verdict=" << to_string(r.response.verdict);
                if (r.response.verdict == Verdict::partial) {
                    out << " available=[";
                    bool first = true;
                    for (const auto& m : r.response.available_medicine_ids) {
                        out << (first ? "" : ",") << m;
                        first = false;
                    }
                    out << ']';
                }
            }
            void operator()(const events::RoundExpanded& x) const {
                out << " round=" << x.round << " radius=" << x.radius_km << "km deadline=" << format_timestamp(x.deadline);
            }
            void operator()(const events::StateChanged& s) const { out << " to=" << to_string(s.to); }
            void operator()(const events::Cancelled&) const {}
        };
        std::visit(Visitor{out}, e.payload);
        out << '\n';
    }
    return out.str();
}

}  // namespace medloc
