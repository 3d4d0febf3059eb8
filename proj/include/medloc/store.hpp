#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "medloc/domain.hpp"
#include "medloc/notifier.hpp"
#include "medloc/request_engine.hpp"
#include "medloc/session.hpp"

namespace medloc {

// Append-only request event log, one JSON object per line. Each append is
// validated against the folded state of its request and fsync'd before the
// sequence number is returned. A torn final line (crash mid-write) is dropped
// on open; damage anywhere else is an error.
class EventLog {
public:
    explicit EventLog(std::filesystem::path file);
    ~EventLog();

    EventLog(const EventLog&) = delete;
    EventLog& operator=(const EventLog&) = delete;

    /// Re-appending an event whose dedup key is already in the log returns the
    /// original sequence. Throws InvalidTrace otherwise-illegal events.
    std::uint64_t append(RequestEvent event);
    /// All-or-nothing: the batch is validated before anything is written.
    std::vector<std::uint64_t> append_batch(std::vector<RequestEvent> batch);

    std::vector<RequestEvent> events_for(const RequestId& id) const;
    std::vector<RequestId> request_ids() const;
    std::size_t size() const;
    std::uint64_t last_sequence() const;

    /// Folds the stored trace from scratch. Throws NotFoundError.
    AvailabilityRequest replay(const RequestId& id) const;

    const std::filesystem::path& path() const noexcept { return path_; }

    /// Parses a log file without opening it for writing. A torn final line is
    /// skipped, not truncated.
    static std::vector<RequestEvent> read_file(const std::filesystem::path& file);

private:
    void load();
    void write_line(const std::string& line);

    std::filesystem::path path_;
    int fd_ = -1;
    mutable std::mutex mutex_;
    std::vector<RequestEvent> events_;
    std::map<RequestId, std::vector<std::size_t>> by_request_;
    std::map<RequestId, AvailabilityRequest> folded_;
    std::map<std::pair<RequestId, std::string>, std::uint64_t> by_key_;
    std::uint64_t next_sequence_ = 1;
};

enum class EntityKind { pharmacies, medicines, prescriptions, sessions, notifications };

std::string_view to_string(EntityKind k) noexcept;
/// Throws NotFoundError for an unknown kind name.
EntityKind parse_entity_kind(std::string_view s);

// One JSON array file per entity kind, replaced atomically on save.
class EntityStore {
public:
    explicit EntityStore(std::filesystem::path dir);

    /// Validates every record against the domain invariants first; returns
    /// the stored count.
    std::size_t save_entities(EntityKind kind, const nlohmann::json& records);
    std::size_t save_entities(std::string_view kind, const nlohmann::json& records) {
        return save_entities(parse_entity_kind(kind), records);
    }
    /// A kind that was never saved loads as an empty array.
    nlohmann::json load_entities(EntityKind kind) const;
    nlohmann::json load_entities(std::string_view kind) const { return load_entities(parse_entity_kind(kind)); }

    template <typename T>
    std::size_t save(EntityKind kind, const std::vector<T>& records) {
        return save_entities(kind, nlohmann::json(records));
    }
    template <typename T>
    std::vector<T> load(EntityKind kind) const {
        return load_entities(kind).template get<std::vector<T>>();
    }

    const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    std::filesystem::path dir_;
    mutable std::mutex mutex_;
};

// Data directory layout:
//   <dir>/events.jsonl           request event log
//   <dir>/entities/<kind>.json   entity snapshots
class Store {
public:
    explicit Store(const std::filesystem::path& dir);

    EventLog& log() noexcept { return log_; }
    const EventLog& log() const noexcept { return log_; }
    EntityStore& entities() noexcept { return entities_; }
    const EntityStore& entities() const noexcept { return entities_; }

    /// True when the directory has no log and no entity files.
    static bool is_empty(const std::filesystem::path& dir);

private:
    std::filesystem::path dir_;
    EventLog log_;
    EntityStore entities_;
};

/// Human-readable dump of one request's trace, one event per line.
std::string format_trace(const std::vector<RequestEvent>& trace);

}  // namespace medloc
