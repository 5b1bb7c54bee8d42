#pragma once

// Seeded synthetic flow corpus with per-class traffic signatures, and a
// paced replay client that posts records to a running detection service.

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fsnt/error.hpp"
#include "fsnt/flowdata.hpp"
#include "fsnt/rng.hpp"

namespace fsnt {

struct LogNormalSpec {
    double median = 1.0;  // exp(mu)
    double sigma = 1.0;
};

// Normal restricted to [min, max] by rejection.
struct TruncatedNormalSpec {
    double mean = 0.0;
    double sd = 1.0;
    double min = 0.0;
    double max = 1e12;
};

struct AttackProfile {
    ClassLabel label = ClassLabel::Benign;
    // (port, probability); the remaining mass is uniform over 1024..65535.
    std::vector<std::pair<double, double>> destination_ports;
    double udp_share = 0.0;  // protocol 17 with this probability, else 6
    LogNormalSpec duration_us;
    TruncatedNormalSpec fwd_packets;
    TruncatedNormalSpec bwd_packets;
    TruncatedNormalSpec fwd_length;  // mean forward packet size, bytes
    TruncatedNormalSpec bwd_length;
    LogNormalSpec length_cv;         // within-flow packet size spread
    LogNormalSpec iat_cv;            // within-flow inter-arrival spread
};

// Declared stand-ins for the four classes: BENIGN mixed-port bidirectional
// TCP, DNS and NTP reflection (port 53 / 123, large responses), UDP flood
// (high forward rate, almost no return traffic).
const std::array<AttackProfile, kClassCount>& default_profiles();

inline constexpr std::array<std::size_t, kClassCount> kDefaultClassCounts = {16000, 30000, 16000, 35000};

struct GeneratorSpec {
    std::array<std::size_t, kClassCount> counts = kDefaultClassCounts;
    std::uint64_t seed = 42;
    std::array<AttackProfile, kClassCount> profiles = default_profiles();
};

// Canonical-schema labeled dataset, class-interleaved by a seeded shuffle.
// Throws EmptySpec when every count is zero.
Dataset generate_dataset(const GeneratorSpec& spec);

// One flow drawn from a profile, in canonical feature order.
std::vector<double> sample_flow(const AttackProfile& profile, Rng& rng);

struct ReplayOptions {
    std::string target = "127.0.0.1:5000";  // host:port or http://host:port
    double rate = 1000.0;                   // flows per second
    std::uint64_t shuffle_seed = 0;
    bool shuffle = true;
    std::size_t max_in_flight = 32;
    double timeout_seconds = 10.0;
};

struct LatencySummary {
    double p50_ms = 0.0;
    double p90_ms = 0.0;
    double p99_ms = 0.0;
    double max_ms = 0.0;
};

struct ReplayClassStats {
    std::size_t records = 0;
    std::size_t responses = 0;
    std::size_t blocked = 0;
    std::size_t predicted_correctly = 0;
};

struct ReplayReport {
    std::size_t sent = 0;
    std::size_t responses = 0;
    std::size_t failures = 0;
    std::size_t allow = 0;
    std::size_t block = 0;
    std::array<ReplayClassStats, kClassCount> per_class{};
    LatencySummary latency;
    double wall_seconds = 0.0;

    // Attack classes: share of responses that were BLOCKed. BENIGN: share
    // ALLOWed. 0 when the class received no responses.
    double recall(ClassLabel c) const;
    double attack_recall() const;       // pooled over the attack classes
    double benign_block_rate() const;
    double class_accuracy() const;      // predicted class == label
};

nlohmann::json to_json(const ReplayReport& r);

// Carries the partial report of a replay that could not reach its target.
class ReplayFailure : public Error {
public:
    ReplayFailure(const std::string& message, ReplayReport partial)
        : Error(ErrorCode::ConnectionFailure, message), report_(std::move(partial)) {}
    const ReplayReport& report() const noexcept { return report_; }

private:
    ReplayReport report_;
};

// Posts every record of a labeled dataset to /classify. Record i goes out no
// earlier than start + i/rate. Throws ReplayFailure (sent = 0) when the
// target does not answer a probe, InvalidArgument for bad options.
ReplayReport replay(const Dataset& d, const ReplayOptions& options);

// Request body for one record of a dataset.
nlohmann::json classify_request(const Dataset& d, std::size_t row, const nlohmann::json& flow_id);

}  // namespace fsnt
