#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "medloc/broker.hpp"
#include "medloc/time.hpp"

namespace httplib {
class Server;
}

namespace medloc {

struct ApiOptions {
    // Non-null enables the /admin endpoints (clock advance, event feed,
    // replay check).
    VirtualClock* virtual_clock = nullptr;
    std::chrono::milliseconds heartbeat_interval = std::chrono::seconds(15);
    // Directory of static UI assets served under /, if any.
    std::string static_dir;
};

// HTTP/JSON front end over a Broker.
class ApiServer {
public:
    ApiServer(Broker& broker, ApiOptions options = {});
    ~ApiServer();

    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    /// Binds and serves on a background thread. Port 0 picks a free port;
    /// the bound port is returned. Throws Error if binding fails.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    /// Blocks serving on the calling thread.
    void listen(const std::string& host, int port);
    void stop();

    int port() const noexcept { return port_; }
    std::string base_url() const;

private:
    void install_routes();

    Broker& broker_;
    ApiOptions options_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    std::atomic<bool> stopping_{false};
    int port_ = 0;
    std::string host_ = "127.0.0.1";

    std::mutex streams_mutex_;
    std::vector<std::weak_ptr<Subscription>> streams_;

    std::mutex idempotency_mutex_;
    std::map<std::pair<std::string, std::string>, std::pair<int, std::string>> idempotent_replies_;
};

// Background tick driver for wall-clock mode.
class TickDriver {
public:
    TickDriver(Broker& broker, std::chrono::milliseconds period);
    ~TickDriver();

private:
    Broker& broker_;
    std::chrono::milliseconds period_;
    std::mutex mutex_;
    std::condition_variable cv_;
    bool stop_ = false;
    std::thread thread_;
};

}  // namespace medloc
