#include "medloc/notifier.hpp"

#include <algorithm>

#include "medloc/error.hpp"

namespace medloc {

std::string_view to_string(NotificationKind k) noexcept {
    return k == NotificationKind::pharmacy_response ? "pharmacy_response" : "request_state_change";
}

NotificationKind parse_notification_kind(std::string_view s) {
    if (s == "pharmacy_response") return NotificationKind::pharmacy_response;
    if (s == "request_state_change") return NotificationKind::request_state_change;
    throw ValidationError("unknown notification kind '" + std::string(s) + "'");
}

NotificationEvent NotificationEvent::response(const RequestId& request, const PharmacyId& pharmacy, Verdict v) {
    return {NotificationKind::pharmacy_response, request, pharmacy, v, std::nullopt};
}

NotificationEvent NotificationEvent::state_change(const RequestId& request, RequestState to) {
    return {NotificationKind::request_state_change, request, std::nullopt, std::nullopt, to};
}

std::string NotificationEvent::key() const {
    if (kind == NotificationKind::pharmacy_response) return "response:" + request_id + ":" + pharmacy_id.value_or("");
    return "state:" + request_id + ":" + std::string(state ? to_string(*state) : "");
}

std::vector<Notification> Subscription::wait(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mutex_);
    cv_.wait_for(lock, timeout, [&] { return closed_ || !queue_.empty(); });
    std::vector<Notification> out(queue_.begin(), queue_.end());
    queue_.clear();
    return out;
}

std::vector<Notification> Subscription::drain() {
    std::lock_guard lock(mutex_);
    std::vector<Notification> out(queue_.begin(), queue_.end());
    queue_.clear();
    return out;
}

void Subscription::close() {
    {
        std::lock_guard lock(mutex_);
        closed_ = true;
    }
    cv_.notify_all();
}

bool Subscription::closed() const {
    std::lock_guard lock(mutex_);
    return closed_;
}

void Subscription::push(const Notification& n) {
    {
        std::lock_guard lock(mutex_);
        if (closed_) return;
        queue_.push_back(n);
    }
    cv_.notify_all();
}

Notification Notifier::emit(const NotificationEvent& event, const UserId& owner) {
    std::vector<std::shared_ptr<Subscription>> targets;
    Notification n;
    {
        std::lock_guard lock(mutex_);
        const auto key = event.key();
        if (const auto it = by_key_.find(key); it != by_key_.end()) return by_id_.at(it->second);
        n.id = next_id_++;
        n.user_id = owner;
        n.kind = event.kind;
        n.request_id = event.request_id;
        n.pharmacy_id = event.pharmacy_id;
        n.verdict = event.verdict;
        n.state = event.state;
        n.created_at = clock_.now();
        n.event_key = key;
        by_id_.emplace(n.id, n);
        by_key_.emplace(key, n.id);

        std::erase_if(subscribers_, [](const auto& w) {
            auto s = w.lock();
            return !s || s->closed();
        });
        for (const auto& w : subscribers_)
            if (auto s = w.lock(); s && s->user() == owner) targets.push_back(std::move(s));
    }
    for (const auto& s : targets) s->push(n);
    return n;
}

std::vector<Notification> Notifier::list(const UserId& user, bool unread_only) const {
    std::vector<Notification> out;
    {
        std::lock_guard lock(mutex_);
        for (const auto& [id, n] : by_id_)
            if (n.user_id == user && !(unread_only && n.read)) out.push_back(n);
    }
    std::sort(out.begin(), out.end(), [](const Notification& x, const Notification& y) {
        if (x.created_at != y.created_at) return x.created_at > y.created_at;
        return x.id > y.id;
    });
    return out;
}

std::vector<Notification> Notifier::since(const UserId& user, NotificationId after_id) const {
    std::lock_guard lock(mutex_);
    std::vector<Notification> out;
    for (auto it = by_id_.upper_bound(after_id); it != by_id_.end(); ++it)
        if (it->second.user_id == user) out.push_back(it->second);
    return out;
}

std::size_t Notifier::mark_read(const UserId& user, const std::vector<NotificationId>& ids) {
    std::lock_guard lock(mutex_);
    for (const auto id : ids) {
        const auto it = by_id_.find(id);
        if (it == by_id_.end() || it->second.user_id != user)
            throw NotFoundError("notification " + std::to_string(id) + " not found");
    }
    std::size_t updated = 0;
    for (const auto id : ids) {
        auto& n = by_id_.at(id);
        if (!n.read) {
            n.read = true;
            ++updated;
        }
    }
    return updated;
}

std::shared_ptr<Subscription> Notifier::subscribe(const UserId& user) {
    auto s = std::make_shared<Subscription>(user);
    std::lock_guard lock(mutex_);
    subscribers_.push_back(s);
    return s;
}

std::vector<Notification> Notifier::all() const {
    std::lock_guard lock(mutex_);
    std::vector<Notification> out;
    out.reserve(by_id_.size());
    for (const auto& [id, n] : by_id_) out.push_back(n);
    return out;
}

void Notifier::restore(std::vector<Notification> notifications) {
    std::lock_guard lock(mutex_);
    by_id_.clear();
    by_key_.clear();
    next_id_ = 1;
    for (auto& n : notifications) {
        next_id_ = std::max(next_id_, n.id + 1);
        by_key_.emplace(n.event_key, n.id);
        by_id_.emplace(n.id, std::move(n));
    }
}

}  // namespace medloc
