#include "fsnt/detectd.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fsnt/error.hpp"
#include "fsnt/model_io.hpp"

namespace fsnt {

using nlohmann::json;

std::string_view decision_name(Decision d) noexcept {
    return d == Decision::Block ? "BLOCK" : "ALLOW";
}

Decision decide(ClassLabel predicted, const Probabilities& proba, double tau, bool source_blocklisted) noexcept {
    if (source_blocklisted) return Decision::Block;
    const double p_attack = 1.0 - proba[class_id(ClassLabel::Benign)];
    return (is_attack(predicted) && p_attack >= tau) ? Decision::Block : Decision::Allow;
}

void ServiceConfig::validate() const {
    if (port < 0 || port > 65535) throw Error(ErrorCode::InvalidArgument, "port must be in [1, 65535]");
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error(ErrorCode::InvalidArgument, "threshold must be in [0, 1]");
    if (window_seconds < 1 || window_seconds > 86400) {
        throw Error(ErrorCode::InvalidArgument, "window seconds must be in [1, 86400]");
    }
    if (worker_threads == 0) throw Error(ErrorCode::InvalidArgument, "need at least one worker thread");
}

void parse_listen(std::string_view spec, ServiceConfig& config) {
    std::string_view host;
    std::string_view port = spec;
    if (const auto colon = spec.rfind(':'); colon != std::string_view::npos) {
        host = spec.substr(0, colon);
        port = spec.substr(colon + 1);
    }
    int value = 0;
    const auto [end, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
    if (ec != std::errc() || end != port.data() + port.size()) {
        throw Error(ErrorCode::InvalidArgument, "bad listen address '" + std::string(spec) + "'");
    }
    if (!host.empty()) config.host = std::string(host);
    config.port = value;
}

// ---------------------------------------------------------------- blocklist

BlockList::BlockList(std::string path) : path_(std::move(path)) {}

void BlockList::load() {
    if (path_.empty() || !std::filesystem::exists(path_)) return;
    std::ifstream in(path_);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot read blocklist '" + path_ + "'");
    std::unordered_map<std::string, std::int64_t> loaded;
    try {
        const auto doc = json::parse(in);
        for (const auto& e : doc.at("entries")) {
            loaded[e.at("source").get<std::string>()] = e.at("added_at").get<std::int64_t>();
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::CorruptFile, "blocklist '" + path_ + "': " + e.what());
    }
    std::lock_guard lock(mu_);
    entries_ = std::move(loaded);
}

bool BlockList::contains(std::string_view source) const {
    std::lock_guard lock(mu_);
    return entries_.find(std::string(source)) != entries_.end();
}

namespace {

void check_source(const std::string& source) {
    if (source.empty() || source.size() > BlockList::kMaxSourceBytes) {
        throw Error(ErrorCode::InvalidArgument, "source must be 1 to 256 bytes");
    }
}

std::vector<BlockEntry> sorted_entries(const std::unordered_map<std::string, std::int64_t>& m) {
    std::vector<BlockEntry> out;
    out.reserve(m.size());
    for (const auto& [s, t] : m) out.push_back({s, t});
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.source < b.source; });
    return out;
}

}  // namespace

void BlockList::persist_locked(const std::vector<BlockEntry>& entries) const {
    if (path_.empty()) return;
    json doc;
    doc["entries"] = json::array();
    for (const auto& e : entries) doc["entries"].push_back({{"source", e.source}, {"added_at", e.added_at}});
    const std::string tmp = path_ + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << doc.dump(2) << '\n';
        out.flush();
        if (!out) throw Error(ErrorCode::IoFailure, "cannot write blocklist '" + tmp + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path_, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot replace blocklist '" + path_ + "': " + ec.message());
}

bool BlockList::add(const std::string& source, std::int64_t now) {
    check_source(source);
    std::lock_guard lock(mu_);
    if (entries_.count(source)) return false;
    auto next = entries_;
    next[source] = now;
    persist_locked(sorted_entries(next));
    entries_ = std::move(next);
    return true;
}

bool BlockList::remove(const std::string& source) {
    std::lock_guard lock(mu_);
    if (!entries_.count(source)) return false;
    auto next = entries_;
    next.erase(source);
    persist_locked(sorted_entries(next));
    entries_ = std::move(next);
    return true;
}

std::vector<BlockEntry> BlockList::entries() const {
    std::lock_guard lock(mu_);
    return sorted_entries(entries_);
}

// ---------------------------------------------------------------- stats window

void StatsWindow::evict_locked(std::int64_t now_second) {
    const std::int64_t oldest = now_second - seconds_ + 1;
    while (!buckets_.empty() && buckets_.front().second < oldest) buckets_.pop_front();
}

void StatsWindow::record(std::int64_t second, ClassLabel predicted, Decision decision) {
    std::lock_guard lock(mu_);
    // Requests can land slightly out of order across handler threads.
    auto it = std::find_if(buckets_.rbegin(), buckets_.rend(), [&](const auto& b) { return b.second <= second; });
    TimelineBucket* bucket = nullptr;
    if (it != buckets_.rend() && it->second == second) {
        bucket = &*it;
    } else {
        bucket = &*buckets_.insert(it.base(), TimelineBucket{second, 0, 0, {}});
    }
    ++bucket->requests;
    ++bucket->class_counts[class_id(predicted)];
    if (decision == Decision::Block) ++bucket->blocks;
    evict_locked(std::max(second, buckets_.back().second));
}

WindowSnapshot StatsWindow::snapshot(std::int64_t now_second) const {
    std::lock_guard lock(mu_);
    WindowSnapshot s;
    s.seconds = seconds_;
    const std::int64_t oldest = now_second - seconds_ + 1;
    for (const auto& b : buckets_) {
        if (b.second < oldest || b.second > now_second) continue;
        s.timeline.push_back(b);
        s.requests += b.requests;
        s.blocks += b.blocks;
        for (std::size_t c = 0; c < kClassCount; ++c) s.class_counts[c] += b.class_counts[c];
    }
    return s;
}

void StatsWindow::set_seconds(int seconds) {
    std::lock_guard lock(mu_);
    seconds_ = seconds;
    if (!buckets_.empty()) evict_locked(buckets_.back().second);
}

int StatsWindow::seconds() const {
    std::lock_guard lock(mu_);
    return seconds_;
}

// ---------------------------------------------------------------- service

namespace {

std::int64_t unix_now() {
    return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

HttpResult error_result(int status, const std::string& message, const std::string& field = {}) {
    json body{{"error", message}};
    if (!field.empty()) body["field"] = field;
    return {status, std::move(body)};
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

json nullable(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

// Key whose value is the literal `token`, or empty when none is found.
std::string key_of_literal(const std::string& body, const std::string& token) {
    for (auto at = body.find(token); at != std::string::npos; at = body.find(token, at + 1)) {
        auto i = at;
        while (i > 0 && std::isspace(static_cast<unsigned char>(body[i - 1]))) --i;
        if (i == 0 || body[i - 1] != ':') continue;
        --i;
        while (i > 0 && std::isspace(static_cast<unsigned char>(body[i - 1]))) --i;
        if (i < 2 || body[i - 1] != '"') continue;
        const auto open = body.rfind('"', i - 2);
        if (open == std::string::npos) continue;
        return body.substr(open + 1, i - 2 - open);
    }
    return {};
}

// A number literal that overflows a double is reported with the key it
// belongs to, so callers can name the offending field.
std::optional<json> parse_body(const std::string& body, std::string* overflow_field = nullptr) {
    try {
        return json::parse(body);
    } catch (const json::parse_error&) {
        return std::nullopt;
    } catch (const json::out_of_range& e) {
        if (overflow_field) {
            const std::string what = e.what();
            const auto open = what.find('\'');
            const auto close = what.rfind('\'');
            if (open != std::string::npos && close > open)
                *overflow_field = key_of_literal(body, what.substr(open + 1, close - open - 1));
        }
        return std::nullopt;
    }
}

}  // namespace

DetectionService::DetectionService(ServiceConfig config, Clock clock)
    : config_(std::move(config)),
      clock_(clock ? std::move(clock) : Clock(unix_now)),
      threshold_(config_.threshold),
      blocklist_(config_.blocklist_path),
      stats_(config_.window_seconds) {
    config_.validate();
    if (!config_.model_path.empty()) {
        set_model(std::make_shared<const TrainedModel>(load_model(config_.model_path)), config_.model_path);
    }
    blocklist_.load();
}

void DetectionService::set_model(std::shared_ptr<const TrainedModel> model, std::string path) {
    auto active = std::make_shared<ActiveModel>();
    active->id = hex64(model_fingerprint(*model));
    active->model = std::move(model);
    active->path = std::move(path);
    std::lock_guard lock(model_mu_);
    active_ = std::move(active);
}

std::shared_ptr<const ActiveModel> DetectionService::active() const {
    std::lock_guard lock(model_mu_);
    return active_;
}

HttpResult DetectionService::classify(const std::string& body) {
    const auto start = std::chrono::steady_clock::now();
    const auto active = this->active();
    if (!active) return error_result(503, "no model loaded");

    std::string overflow;
    const auto req = parse_body(body, &overflow);
    if (!overflow.empty()) return error_result(400, "feature must be finite", overflow);
    if (!req || !req->is_object()) return error_result(400, "request body must be a JSON object");
    const auto feats = req->find("features");
    if (feats == req->end() || !feats->is_object()) return error_result(400, "missing features object", "features");

    const auto& schema = active->model->preprocessing().input_schema;
    std::vector<double> values(schema.count());
    for (std::size_t j = 0; j < schema.count(); ++j) {
        const auto& name = schema.name(j);
        const auto it = feats->find(name);
        if (it == feats->end()) return error_result(400, "missing feature", name);
        if (!it->is_number()) return error_result(400, "feature must be a number", name);
        values[j] = it->get<double>();
        if (!std::isfinite(values[j])) return error_result(400, "feature must be finite", name);
    }

    std::string source;
    if (const auto it = req->find("source"); it != req->end() && !it->is_null()) {
        if (!it->is_string()) return error_result(400, "source must be a string", "source");
        source = it->get<std::string>();
    }
    json flow_id;
    if (const auto it = req->find("flow_id"); it != req->end() && !it->is_null()) {
        if (it->is_structured()) return error_result(400, "flow_id must be a scalar", "flow_id");
        flow_id = *it;
    } else {
        flow_id = next_flow_id_.fetch_add(1);
    }

    const auto proba = active->model->predict_proba(values);
    const auto predicted = argmax(proba);
    const bool listed = !source.empty() && blocklist_.contains(source);
    const auto decision = decide(predicted, proba, threshold_.load(), listed);
    stats_.record(clock_(), predicted, decision);

    json out;
    out["flow_id"] = std::move(flow_id);
    out["class_id"] = class_id(predicted);
    out["label"] = class_name(predicted);
    out["probabilities"] = proba;
    out["p_attack"] = 1.0 - proba[0];
    out["ddos"] = is_attack(predicted);
    out["decision"] = decision_name(decision);
    out["source"] = source.empty() ? json(nullptr) : json(source);
    out["source_blocklisted"] = listed;
    out["model_id"] = active->id;
    out["model_kind"] = kind_name(active->model->kind());
    out["latency_ms"] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return {200, std::move(out)};
}

HttpResult DetectionService::ddos_result() const {
    const auto snap = stats_.snapshot(clock_());
    const auto active = this->active();
    std::optional<double> accuracy;
    std::optional<double> seconds;
    if (active && active->model->metadata().evaluation) {
        accuracy = active->model->metadata().evaluation->accuracy;
        seconds = active->model->metadata().evaluation->seconds;
    }
    json counts = json::object();
    for (std::size_t c = 0; c < kClassCount; ++c) {
        counts[std::string(class_name(static_cast<ClassLabel>(c)))] = snap.class_counts[c];
    }
    json timeline = json::array();
    for (const auto& b : snap.timeline) {
        timeline.push_back(
            {{"t", b.second}, {"requests", b.requests}, {"blocks", b.blocks}, {"class_counts", b.class_counts}});
    }
    json out;
    out["ddos"] = snap.blocks > 0;
    out["accuracy"] = nullable(accuracy);
    out["calculation_time_s"] = nullable(seconds);
    out["window"] = {{"seconds", snap.seconds},
                     {"requests", snap.requests},
                     {"blocks", snap.blocks},
                     {"class_counts", std::move(counts)}};
    out["timeline"] = std::move(timeline);
    return {200, std::move(out)};
}

HttpResult DetectionService::get_model() const {
    const auto active = this->active();
    if (!active) return {200, json{{"loaded", false}}};
    const auto& m = *active->model;
    std::optional<double> accuracy;
    std::optional<double> auc;
    std::optional<double> seconds;
    if (const auto& e = m.metadata().evaluation) {
        accuracy = e->accuracy;
        auc = e->macro_auc;
        seconds = e->seconds;
    }
    json out;
    out["loaded"] = true;
    out["model_id"] = active->id;
    out["kind"] = kind_name(m.kind());
    out["path"] = active->path;
    out["accuracy"] = nullable(accuracy);
    out["macro_auc"] = nullable(auc);
    out["calculation_time_s"] = nullable(seconds);
    out["train_rows"] = m.metadata().train_rows;
    out["seed"] = m.spec().seed;
    out["hyperparameters"] = m.spec().hyperparameters;
    out["features"] = m.preprocessing().input_schema.names();
    out["pca_components"] = m.preprocessing().pca ? m.preprocessing().pca->k() : 0;
    return {200, std::move(out)};
}

HttpResult DetectionService::put_model(const std::string& body) {
    const auto req = parse_body(body);
    if (!req || !req->is_object()) return error_result(400, "request body must be a JSON object");
    const auto it = req->find("path");
    if (it == req->end() || !it->is_string() || it->get<std::string>().empty()) {
        return error_result(400, "path must be a non-empty string", "path");
    }
    const auto path = it->get<std::string>();
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) return error_result(400, "no model file at '" + path + "'", "path");
    try {
        set_model(std::make_shared<const TrainedModel>(load_model(path)), path);
    } catch (const Error& e) {
        const int status = e.code() == ErrorCode::IoFailure ? 400 : 422;
        json body_out{{"error", e.what()}, {"code", error_code_name(e.code())}};
        return {status, std::move(body_out)};
    }
    return get_model();
}

HttpResult DetectionService::get_config() const {
    json out;
    out["threshold"] = threshold_.load();
    out["window_seconds"] = stats_.seconds();
    out["listen"] = config_.host + ":" + std::to_string(config_.port);
    out["blocklist_file"] = config_.blocklist_path;
    return {200, std::move(out)};
}

HttpResult DetectionService::put_config(const std::string& body) {
    const auto req = parse_body(body);
    if (!req || !req->is_object()) return error_result(400, "request body must be a JSON object");
    std::optional<double> tau;
    std::optional<int> window;
    for (const auto& [key, value] : req->items()) {
        if (key == "threshold") {
            if (!value.is_number()) return error_result(400, "threshold must be a number", key);
            const double v = value.get<double>();
            if (!(v >= 0.0 && v <= 1.0)) return error_result(400, "threshold must be in [0, 1]", key);
            tau = v;
        } else if (key == "window_seconds") {
            if (!value.is_number_integer()) return error_result(400, "window_seconds must be an integer", key);
            const auto v = value.get<std::int64_t>();
            if (v < 1 || v > 86400) return error_result(400, "window_seconds must be in [1, 86400]", key);
            window = static_cast<int>(v);
        } else {
            return error_result(400, "unknown or read-only setting", key);
        }
    }
    std::lock_guard lock(config_mu_);
    if (tau) threshold_.store(*tau);
    if (window) stats_.set_seconds(*window);
    return get_config();
}

HttpResult DetectionService::get_blocklist() const {
    json entries = json::array();
    for (const auto& e : blocklist_.entries()) entries.push_back({{"source", e.source}, {"added_at", e.added_at}});
    return {200, json{{"entries", std::move(entries)}}};
}

HttpResult DetectionService::put_blocklist(const std::string& source) {
    try {
        const bool created = blocklist_.add(source, clock_());
        json out{{"source", source}, {"created", created}};
        for (const auto& e : blocklist_.entries())
            if (e.source == source) out["added_at"] = e.added_at;
        return {200, std::move(out)};
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidArgument) return error_result(400, e.what(), "source");
        return error_result(500, e.what());
    }
}

HttpResult DetectionService::delete_blocklist(const std::string& source) {
    try {
        if (!blocklist_.remove(source)) return error_result(404, "source not in blocklist", "source");
    } catch (const Error& e) {
        return error_result(500, e.what());
    }
    return {200, json{{"source", source}, {"removed", true}}};
}

// ---------------------------------------------------------------- HTTP

HttpServer::HttpServer(DetectionService& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
    auto& s = *server_;
    const auto threads = service_.initial_config().worker_threads;
    s.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
    // Small responses on keep-alive connections otherwise wait out delayed ACKs.
    s.set_tcp_nodelay(true);
    // Replay and other streaming clients reuse one connection for many flows.
    s.set_keep_alive_max_count(10000);
    s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Methods", "GET, POST, PUT, DELETE, OPTIONS"},
                           {"Access-Control-Allow-Headers", "Content-Type"}});

    auto reply = [](httplib::Response& res, const HttpResult& r) {
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    };
    s.Post("/classify", [this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, service_.classify(req.body));
    });
    s.Get("/ddos/result", [this, reply](const httplib::Request&, httplib::Response& res) {
        reply(res, service_.ddos_result());
    });
    s.Get("/model", [this, reply](const httplib::Request&, httplib::Response& res) {
        reply(res, service_.get_model());
    });
    s.Put("/model", [this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, service_.put_model(req.body));
    });
    s.Get("/config", [this, reply](const httplib::Request&, httplib::Response& res) {
        reply(res, service_.get_config());
    });
    s.Put("/config", [this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, service_.put_config(req.body));
    });
    s.Get("/blocklist", [this, reply](const httplib::Request&, httplib::Response& res) {
        reply(res, service_.get_blocklist());
    });
    s.Put(R"(/blocklist/(.+))", [this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, service_.put_blocklist(req.matches[1]));
    });
    s.Delete(R"(/blocklist/(.+))", [this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, service_.delete_blocklist(req.matches[1]));
    });
    s.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    if (const auto& dir = service_.initial_config().dashboard_dir; !dir.empty()) {
        if (!s.set_mount_point("/", dir)) {
            throw Error(ErrorCode::IoFailure, "dashboard directory '" + dir + "' does not exist");
        }
    }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
    const auto& cfg = service_.initial_config();
    if (cfg.port == 0) {
        const int port = server_->bind_to_any_port(cfg.host);
        if (port < 0) throw Error(ErrorCode::IoFailure, "cannot bind " + cfg.host);
        return port;
    }
    if (!server_->bind_to_port(cfg.host, cfg.port)) {
        throw Error(ErrorCode::IoFailure, "cannot bind " + cfg.host + ":" + std::to_string(cfg.port));
    }
    return cfg.port;
}

void HttpServer::run() { server_->listen_after_bind(); }

void HttpServer::stop() {
    if (server_ && server_->is_running()) server_->stop();
}

void HttpServer::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace fsnt
