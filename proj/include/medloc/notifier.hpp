#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "medloc/domain.hpp"
#include "medloc/request_engine.hpp"
#include "medloc/time.hpp"

namespace medloc {

enum class NotificationKind { pharmacy_response, request_state_change };

std::string_view to_string(NotificationKind k) noexcept;
NotificationKind parse_notification_kind(std::string_view s);

using NotificationId = std::uint64_t;

struct Notification {
    NotificationId id = 0;
    UserId user_id;
    NotificationKind kind = NotificationKind::pharmacy_response;
    RequestId request_id;
    std::optional<PharmacyId> pharmacy_id;
    std::optional<Verdict> verdict;
    std::optional<RequestState> state;
    Timestamp created_at{};
    bool read = false;
    std::string event_key;

    friend bool operator==(const Notification&, const Notification&) = default;
};

// What happened, independent of who gets told. Two events with the same key()
// are the same event.
struct NotificationEvent {
    NotificationKind kind = NotificationKind::pharmacy_response;
    RequestId request_id;
    std::optional<PharmacyId> pharmacy_id;
    std::optional<Verdict> verdict;
    std::optional<RequestState> state;

    static NotificationEvent response(const RequestId& request, const PharmacyId& pharmacy, Verdict v);
    static NotificationEvent state_change(const RequestId& request, RequestState to);

    std::string key() const;
};

// A live feed for one user. Delivery is at-least-once; consumers dedup by id.
class Subscription {
public:
    explicit Subscription(UserId user) : user_(std::move(user)) {}

    const UserId& user() const noexcept { return user_; }

    /// Blocks until something is queued, the subscription closes or the
    /// timeout elapses. Returns whatever was queued (possibly nothing).
    std::vector<Notification> wait(std::chrono::milliseconds timeout);
    std::vector<Notification> drain();
    void close();
    bool closed() const;

private:
    friend class Notifier;
    void push(const Notification& n);

    UserId user_;
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<Notification> queue_;
    bool closed_ = false;
};

// Per-user inbox. The inbox is exactly-once per event key; pushes to live
// subscriptions happen after the entry is stored.
class Notifier {
public:
    explicit Notifier(const Clock& clock) : clock_(clock) {}

    /// Returns the stored notification; a repeat of an earlier event returns
    /// the original entry and pushes nothing.
    Notification emit(const NotificationEvent& event, const UserId& owner);

    /// Newest first (created_at desc, then id desc).
    std::vector<Notification> list(const UserId& user, bool unread_only) const;
    /// Entries with id > after_id, oldest first.
    std::vector<Notification> since(const UserId& user, NotificationId after_id) const;

    /// Returns how many flipped from unread to read. Throws NotFoundError if an
    /// id is unknown or belongs to someone else; nothing is changed then.
    std::size_t mark_read(const UserId& user, const std::vector<NotificationId>& ids);

    std::shared_ptr<Subscription> subscribe(const UserId& user);

    std::vector<Notification> all() const;
    void restore(std::vector<Notification> notifications);

private:
    const Clock& clock_;
    mutable std::mutex mutex_;
    std::map<NotificationId, Notification> by_id_;
    std::unordered_map<std::string, NotificationId> by_key_;
    NotificationId next_id_ = 1;
    std::vector<std::weak_ptr<Subscription>> subscribers_;
};

}  // namespace medloc
