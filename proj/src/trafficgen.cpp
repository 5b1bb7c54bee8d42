#include "fsnt/trafficgen.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>

namespace fsnt {

namespace {

// Canonical column positions.
enum Col : std::size_t {
    kSrcPort,
    kDstPort,
    kProtocol,
    kDuration,
    kFwdPackets,
    kBwdPackets,
    kFwdBytes,
    kBwdBytes,
    kFwdLenMax,
    kFwdLenMin,
    kFwdLenMean,
    kFwdLenStd,
    kBwdLenMax,
    kBwdLenMin,
    kBwdLenMean,
    kFlowBytesPerSec,
    kFlowPacketsPerSec,
    kIatMean,
    kIatStd,
    kIatMax,
    kIatMin,
    kFwdIatMean,
    kBwdIatMean,
    kPacketLenMean,
    kColumns,
};

double draw(const LogNormalSpec& s, Rng& rng) {
    std::lognormal_distribution<double> dist(std::log(s.median), s.sigma);
    return dist(rng);
}

double draw(const TruncatedNormalSpec& s, Rng& rng) {
    std::normal_distribution<double> dist(s.mean, s.sd);
    for (int attempt = 0; attempt < 64; ++attempt) {
        const double v = dist(rng);
        if (v >= s.min && v <= s.max) return v;
    }
    return std::clamp(s.mean, s.min, s.max);
}

double draw_port(const std::vector<std::pair<double, double>>& ports, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double x = u(rng);
    for (const auto& [port, p] : ports) {
        if (x < p) return port;
        x -= p;
    }
    return static_cast<double>(std::uniform_int_distribution<int>(1024, 65535)(rng));
}

// Packet sizes within a flow: mean m, relative spread cv, clipped at 0.
struct SizeStats {
    double max;
    double min;
    double std;
};

SizeStats size_stats(double mean, double packets, double cv, Rng& rng) {
    if (packets < 2.0) return {mean, mean, 0.0};
    const double sd = mean * cv;
    std::uniform_real_distribution<double> u(0.5, 2.0);
    const double spread = std::sqrt(2.0 * std::log(packets));  // expected extreme of n normals
    return {mean + sd * spread * u(rng), std::max(0.0, mean - sd * spread * u(rng)), sd};
}

}  // namespace

const std::array<AttackProfile, kClassCount>& default_profiles() {
    static const std::array<AttackProfile, kClassCount> profiles = [] {
        std::array<AttackProfile, kClassCount> p;

        auto& benign = p[0];
        benign.label = ClassLabel::Benign;
        benign.destination_ports = {{443, 0.40}, {80, 0.18}, {53, 0.10}, {123, 0.02}, {22, 0.05}};
        benign.udp_share = 0.25;
        benign.duration_us = {3.0e6, 1.6};
        benign.fwd_packets = {14, 10, 1, 400};
        benign.bwd_packets = {12, 10, 0, 400};
        benign.fwd_length = {180, 140, 0, 1460};
        benign.bwd_length = {520, 380, 0, 1460};
        benign.length_cv = {0.6, 0.5};
        benign.iat_cv = {1.2, 0.6};

        auto& dns = p[1];
        dns.label = ClassLabel::DdosDns;
        dns.destination_ports = {{53, 0.92}};
        dns.udp_share = 0.97;
        dns.duration_us = {4.0e4, 1.4};
        dns.fwd_packets = {4, 3, 1, 60};
        dns.bwd_packets = {3, 3, 0, 60};
        dns.fwd_length = {62, 14, 28, 200};
        dns.bwd_length = {820, 200, 0, 1460};
        dns.length_cv = {0.15, 0.5};
        dns.iat_cv = {0.5, 0.6};

        auto& ntp = p[2];
        ntp.label = ClassLabel::DdosNtp;
        ntp.destination_ports = {{123, 0.92}};
        ntp.udp_share = 0.97;
        ntp.duration_us = {1.5e5, 1.3};
        ntp.fwd_packets = {6, 4, 1, 80};
        ntp.bwd_packets = {8, 5, 0, 120};
        ntp.fwd_length = {90, 25, 28, 300};
        ntp.bwd_length = {1400, 70, 0, 1500};
        ntp.length_cv = {0.08, 0.5};
        ntp.iat_cv = {0.4, 0.6};

        auto& udp = p[3];
        udp.label = ClassLabel::DdosUdp;
        udp.destination_ports = {};
        udp.udp_share = 0.99;
        udp.duration_us = {8.0e5, 1.2};
        udp.fwd_packets = {160, 90, 2, 2000};
        udp.bwd_packets = {0.2, 0.8, 0, 20};
        udp.fwd_length = {480, 320, 0, 1460};
        udp.bwd_length = {40, 60, 0, 1460};
        udp.length_cv = {0.05, 0.6};
        udp.iat_cv = {0.25, 0.6};
        return p;
    }();
    return profiles;
}

std::vector<double> sample_flow(const AttackProfile& prof, Rng& rng) {
    std::vector<double> v(kColumns, 0.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    v[kSrcPort] = static_cast<double>(std::uniform_int_distribution<int>(1024, 65535)(rng));
    v[kDstPort] = draw_port(prof.destination_ports, rng);
    v[kProtocol] = u(rng) < prof.udp_share ? 17.0 : 6.0;

    const double duration = std::max(1.0, std::round(draw(prof.duration_us, rng)));
    const double fwd = std::round(draw(prof.fwd_packets, rng));
    const double bwd = std::round(draw(prof.bwd_packets, rng));
    const double fwd_mean = fwd > 0 ? draw(prof.fwd_length, rng) : 0.0;
    const double bwd_mean = bwd > 0 ? draw(prof.bwd_length, rng) : 0.0;
    v[kDuration] = duration;
    v[kFwdPackets] = fwd;
    v[kBwdPackets] = bwd;
    v[kFwdBytes] = std::round(fwd * fwd_mean);
    v[kBwdBytes] = std::round(bwd * bwd_mean);

    const auto fs = size_stats(fwd_mean, fwd, draw(prof.length_cv, rng), rng);
    v[kFwdLenMax] = fs.max;
    v[kFwdLenMin] = fs.min;
    v[kFwdLenMean] = fwd_mean;
    v[kFwdLenStd] = fs.std;
    const auto bs = size_stats(bwd_mean, bwd, draw(prof.length_cv, rng), rng);
    v[kBwdLenMax] = bs.max;
    v[kBwdLenMin] = bs.min;
    v[kBwdLenMean] = bwd_mean;

    const double seconds = duration / 1e6;
    const double packets = fwd + bwd;
    v[kFlowBytesPerSec] = (v[kFwdBytes] + v[kBwdBytes]) / seconds;
    v[kFlowPacketsPerSec] = packets / seconds;

    const double iat = packets > 1 ? duration / (packets - 1) : duration;
    const double cv = draw(prof.iat_cv, rng);
    v[kIatMean] = iat;
    v[kIatStd] = packets > 2 ? iat * cv : 0.0;
    v[kIatMax] = packets > 1 ? std::min(duration, iat * (1.0 + cv * (1.0 + u(rng)))) : duration;
    v[kIatMin] = packets > 1 ? iat * std::max(0.0, 1.0 - cv) * u(rng) : duration;
    v[kFwdIatMean] = fwd > 1 ? duration / (fwd - 1) : 0.0;
    v[kBwdIatMean] = bwd > 1 ? duration * u(rng) / (bwd - 1) : 0.0;
    v[kPacketLenMean] = packets > 0 ? (v[kFwdBytes] + v[kBwdBytes]) / packets : 0.0;
    return v;
}

Dataset generate_dataset(const GeneratorSpec& spec) {
    const auto total = std::accumulate(spec.counts.begin(), spec.counts.end(), std::size_t{0});
    if (total == 0) throw Error(ErrorCode::EmptySpec, "generator spec has no records");

    // Class c draws from its own stream so changing one count leaves the
    // other classes' records unchanged.
    std::vector<std::vector<double>> rows;
    std::vector<ClassLabel> labels;
    rows.reserve(total);
    labels.reserve(total);
    for (std::size_t c = 0; c < kClassCount; ++c) {
        Rng rng(derive_seed(spec.seed, c));
        auto profile = spec.profiles[c];
        for (std::size_t i = 0; i < spec.counts[c]; ++i) {
            rows.push_back(sample_flow(profile, rng));
            labels.push_back(static_cast<ClassLabel>(c));
        }
    }
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(spec.seed, kClassCount));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    Dataset d(FeatureSchema::canonical(), true);
    d.reserve(total);
    for (const auto i : order) d.add(rows[i], labels[i]);
    return d;
}

// ---------------------------------------------------------------- replay

double ReplayReport::recall(ClassLabel c) const {
    const auto& s = per_class[class_id(c)];
    if (s.responses == 0) return 0.0;
    const auto hits = is_attack(c) ? s.blocked : s.responses - s.blocked;
    return static_cast<double>(hits) / static_cast<double>(s.responses);
}

double ReplayReport::attack_recall() const {
    std::size_t blocked = 0;
    std::size_t seen = 0;
    for (std::size_t c = 1; c < kClassCount; ++c) {
        blocked += per_class[c].blocked;
        seen += per_class[c].responses;
    }
    return seen ? static_cast<double>(blocked) / static_cast<double>(seen) : 0.0;
}

double ReplayReport::benign_block_rate() const {
    const auto& s = per_class[0];
    return s.responses ? static_cast<double>(s.blocked) / static_cast<double>(s.responses) : 0.0;
}

double ReplayReport::class_accuracy() const {
    std::size_t correct = 0;
    for (const auto& s : per_class) correct += s.predicted_correctly;
    return responses ? static_cast<double>(correct) / static_cast<double>(responses) : 0.0;
}

nlohmann::json to_json(const ReplayReport& r) {
    nlohmann::json classes = nlohmann::json::array();
    for (std::size_t c = 0; c < kClassCount; ++c) {
        const auto& s = r.per_class[c];
        classes.push_back({{"class", c},
                           {"label", class_name(static_cast<ClassLabel>(c))},
                           {"records", s.records},
                           {"responses", s.responses},
                           {"blocked", s.blocked},
                           {"recall", r.recall(static_cast<ClassLabel>(c))}});
    }
    return {{"sent", r.sent},
            {"responses", r.responses},
            {"failures", r.failures},
            {"decisions", {{"ALLOW", r.allow}, {"BLOCK", r.block}}},
            {"attack_recall", r.attack_recall()},
            {"benign_block_rate", r.benign_block_rate()},
            {"class_accuracy", r.class_accuracy()},
            {"classes", std::move(classes)},
            {"latency_ms",
             {{"p50", r.latency.p50_ms}, {"p90", r.latency.p90_ms}, {"p99", r.latency.p99_ms}, {"max", r.latency.max_ms}}},
            {"wall_seconds", r.wall_seconds}};
}

nlohmann::json classify_request(const Dataset& d, std::size_t row, const nlohmann::json& flow_id) {
    nlohmann::json features = nlohmann::json::object();
    const auto values = d.row(row);
    for (std::size_t j = 0; j < d.width(); ++j) features[d.schema().name(j)] = values[j];
    return {{"flow_id", flow_id}, {"features", std::move(features)}};
}

namespace {

struct Target {
    std::string host;
    int port = 0;
};

Target parse_target(std::string spec) {
    for (const std::string scheme : {"http://", "HTTP://"}) {
        if (spec.rfind(scheme, 0) == 0) spec.erase(0, scheme.size());
    }
    while (!spec.empty() && spec.back() == '/') spec.pop_back();
    const auto colon = spec.rfind(':');
    Target t;
    try {
        if (colon == std::string::npos) throw std::invalid_argument("no port");
        t.host = spec.substr(0, colon);
        std::size_t used = 0;
        t.port = std::stoi(spec.substr(colon + 1), &used);
        if (used != spec.size() - colon - 1 || t.host.empty() || t.port < 1 || t.port > 65535) {
            throw std::invalid_argument("bad port");
        }
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidArgument, "target must be host:port, got '" + spec + "'");
    }
    return t;
}

double percentile(std::vector<double> sorted, double q) {
    if (sorted.empty()) return 0.0;
    // Nearest rank.
    const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
    return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

struct Outcome {
    bool ok = false;
    int class_id = -1;
    bool blocked = false;
    double latency_ms = 0.0;
};

}  // namespace

ReplayReport replay(const Dataset& d, const ReplayOptions& options) {
    if (!d.labeled()) throw Error(ErrorCode::NotLabeled, "replay needs labeled records");
    if (!(options.rate > 0.0) || !std::isfinite(options.rate)) {
        throw Error(ErrorCode::InvalidArgument, "rate must be positive");
    }
    if (options.max_in_flight == 0) throw Error(ErrorCode::InvalidArgument, "max_in_flight must be positive");
    const auto target = parse_target(options.target);
    const auto timeout = std::chrono::duration<double>(options.timeout_seconds);
    auto make_client = [&] {
        auto c = std::make_unique<httplib::Client>(target.host, target.port);
        c->set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
        c->set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
        c->set_keep_alive(true);
        c->set_tcp_nodelay(true);
        return c;
    };

    {
        auto probe = make_client();
        const auto res = probe->Get("/config");
        if (!res) {
            throw ReplayFailure("cannot reach " + target.host + ":" + std::to_string(target.port) + " (" +
                                    httplib::to_string(res.error()) + ")",
                                ReplayReport{});
        }
    }

    std::vector<std::size_t> order(d.size());
    std::iota(order.begin(), order.end(), 0);
    if (options.shuffle) {
        Rng rng(options.shuffle_seed);
        std::shuffle(order.begin(), order.end(), rng);
    }

    std::vector<Outcome> outcomes(order.size());
    std::atomic<std::size_t> next{0};
    const auto start = std::chrono::steady_clock::now();
    auto worker = [&] {
        auto client = make_client();
        for (std::size_t i = next.fetch_add(1); i < order.size(); i = next.fetch_add(1)) {
            const auto due = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                         std::chrono::duration<double>(static_cast<double>(i) / options.rate));
            std::this_thread::sleep_until(due);
            const auto row = order[i];
            const auto body = classify_request(d, row, row).dump();
            const auto t0 = std::chrono::steady_clock::now();
            const auto res = client->Post("/classify", body, "application/json");
            auto& out = outcomes[i];
            out.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            if (!res || res->status != 200) continue;
            try {
                const auto j = nlohmann::json::parse(res->body);
                out.class_id = j.at("class_id").get<int>();
                out.blocked = j.at("decision").get<std::string>() == "BLOCK";
                out.ok = out.class_id >= 0 && out.class_id < static_cast<int>(kClassCount);
            } catch (const nlohmann::json::exception&) {
                out.ok = false;
            }
        }
    };
    const auto n_workers = std::min(options.max_in_flight, std::max<std::size_t>(order.size(), 1));
    std::vector<std::thread> threads;
    threads.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    ReplayReport r;
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    r.sent = order.size();
    std::vector<double> latencies;
    latencies.reserve(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto label = class_id(d.label(order[i]));
        auto& cls = r.per_class[label];
        ++cls.records;
        const auto& o = outcomes[i];
        if (!o.ok) {
            ++r.failures;
            continue;
        }
        ++r.responses;
        ++cls.responses;
        latencies.push_back(o.latency_ms);
        if (o.blocked) {
            ++r.block;
            ++cls.blocked;
        } else {
            ++r.allow;
        }
        if (o.class_id == label) ++cls.predicted_correctly;
    }
    std::sort(latencies.begin(), latencies.end());
    r.latency = {percentile(latencies, 0.50), percentile(latencies, 0.90), percentile(latencies, 0.99),
                 latencies.empty() ? 0.0 : latencies.back()};
    return r;
}

}  // namespace fsnt
