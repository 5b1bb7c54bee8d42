#pragma once

// Real-time detection service: classify flow records with the active model,
// turn probabilities into ALLOW/BLOCK, and expose the operator controls
// (threshold, model swap, blocklist) over HTTP.

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "fsnt/learn.hpp"

namespace httplib {
class Server;
}

namespace fsnt {

enum class Decision { Allow, Block };

std::string_view decision_name(Decision d) noexcept;

// BLOCK iff (class ≠ BENIGN and 1 − p(BENIGN) ≥ tau) or the source is
// blocklisted.
Decision decide(ClassLabel predicted, const Probabilities& proba, double tau, bool source_blocklisted) noexcept;

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 5000;
    std::string model_path;      // empty: start without a model (classify answers 503)
    double threshold = 0.5;
    std::string blocklist_path;  // empty: in-memory only
    int window_seconds = 60;
    std::string dashboard_dir;   // served at / when set
    std::size_t worker_threads = 256;

    // Throws InvalidArgument.
    void validate() const;
};

// Parses "host:port", ":port" or "port".
void parse_listen(std::string_view spec, ServiceConfig& config);

struct BlockEntry {
    std::string source;
    std::int64_t added_at = 0;  // unix seconds
};

// Source identifiers to block unconditionally. Every mutation rewrites the
// persistence file (temp file + rename) before it returns.
class BlockList {
public:
    explicit BlockList(std::string path = {});

    // Reads the persistence file if it exists. Throws CorruptFile, IoFailure.
    void load();

    bool contains(std::string_view source) const;
    // Returns false when the source was already present. Throws
    // InvalidArgument for an empty or over-long source and IoFailure when the
    // file cannot be written (the in-memory set is then left unchanged).
    bool add(const std::string& source, std::int64_t now);
    bool remove(const std::string& source);
    std::vector<BlockEntry> entries() const;  // sorted by source

    static constexpr std::size_t kMaxSourceBytes = 256;

private:
    void persist_locked(const std::vector<BlockEntry>& entries) const;

    std::string path_;
    mutable std::mutex mu_;
    std::unordered_map<std::string, std::int64_t> entries_;
};

struct TimelineBucket {
    std::int64_t second = 0;  // unix seconds
    std::uint64_t requests = 0;
    std::uint64_t blocks = 0;
    std::array<std::uint64_t, kClassCount> class_counts{};
};

struct WindowSnapshot {
    int seconds = 0;
    std::uint64_t requests = 0;
    std::uint64_t blocks = 0;
    std::array<std::uint64_t, kClassCount> class_counts{};
    std::vector<TimelineBucket> timeline;  // oldest first, non-empty buckets only
};

// One-second buckets covering the trailing window.
class StatsWindow {
public:
    explicit StatsWindow(int seconds) : seconds_(seconds) {}

    void record(std::int64_t second, ClassLabel predicted, Decision decision);
    WindowSnapshot snapshot(std::int64_t now_second) const;
    void set_seconds(int seconds);
    int seconds() const;

private:
    void evict_locked(std::int64_t now_second);

    mutable std::mutex mu_;
    int seconds_;
    std::deque<TimelineBucket> buckets_;
};

// A loaded model plus the tag that identifies it in responses.
struct ActiveModel {
    std::shared_ptr<const TrainedModel> model;
    std::string id;    // hex fingerprint of the serialized model
    std::string path;
};

struct HttpResult {
    int status = 200;
    nlohmann::json body;
};

// Transport-independent request handlers; HttpServer only adapts them.
class DetectionService {
public:
    using Clock = std::function<std::int64_t()>;  // unix seconds

    // Loads the model and the blocklist named in config. Throws on failure.
    explicit DetectionService(ServiceConfig config, Clock clock = {});

    HttpResult classify(const std::string& body);
    HttpResult ddos_result() const;
    HttpResult get_model() const;
    HttpResult put_model(const std::string& body);
    HttpResult get_config() const;
    HttpResult put_config(const std::string& body);
    HttpResult get_blocklist() const;
    HttpResult put_blocklist(const std::string& source);
    HttpResult delete_blocklist(const std::string& source);

    // Replaces the active model; in-flight requests finish on the old one.
    void set_model(std::shared_ptr<const TrainedModel> model, std::string path);
    std::shared_ptr<const ActiveModel> active() const;

    double threshold() const { return threshold_.load(); }
    const ServiceConfig& initial_config() const { return config_; }

private:
    ServiceConfig config_;
    Clock clock_;
    std::atomic<double> threshold_;
    mutable std::mutex model_mu_;
    std::shared_ptr<const ActiveModel> active_;
    mutable std::mutex config_mu_;  // serializes PUT /config
    BlockList blocklist_;
    StatsWindow stats_;
    std::atomic<std::uint64_t> next_flow_id_{1};
};

class HttpServer {
public:
    explicit HttpServer(DetectionService& service);
    ~HttpServer();

    // Binds to config host/port; port 0 picks a free port. Returns the port.
    // Throws IoFailure.
    int bind();
    // Blocks until stop() is called.
    void run();
    void stop();
    // Blocks until the server is accepting connections.
    void wait_until_ready() const;

private:
    DetectionService& service_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace fsnt
