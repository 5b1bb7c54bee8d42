#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "fsnt/flowdata.hpp"
#include "fsnt/rng.hpp"

namespace fsnt::fixture {

// Gaussian blobs, one centre per class, `d` features named f0..f{d-1}.
inline Dataset blobs(std::size_t per_class, std::size_t d, double spread, std::uint64_t seed,
                     std::size_t classes = kClassCount) {
    std::vector<std::string> names;
    for (std::size_t j = 0; j < d; ++j) names.push_back("f" + std::to_string(j));
    Dataset out(FeatureSchema(names), true);
    Rng rng(seed);
    std::normal_distribution<double> noise(0.0, spread);
    std::vector<double> row(d);
    for (std::size_t i = 0; i < per_class; ++i) {
        for (std::size_t c = 0; c < classes; ++c) {
            for (std::size_t j = 0; j < d; ++j) {
                const double centre = (j % classes == c) ? 3.0 : 0.0;
                row[j] = centre + noise(rng);
            }
            out.add(row, class_from_id(static_cast<int>(c)));
        }
    }
    return out;
}

// Uniform values in [-scale, scale] with uniformly random labels.
inline Dataset random_dataset(std::size_t n, std::size_t d, std::uint64_t seed, double scale = 1.0,
                              std::size_t classes = kClassCount) {
    std::vector<std::string> names;
    for (std::size_t j = 0; j < d; ++j) names.push_back("f" + std::to_string(j));
    Dataset out(FeatureSchema(names), true);
    Rng rng(seed);
    std::uniform_real_distribution<double> u(-scale, scale);
    std::uniform_int_distribution<int> label(0, static_cast<int>(classes) - 1);
    std::vector<double> row(d);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& v : row) v = u(rng);
        out.add(row, class_from_id(label(rng)));
    }
    return out;
}

inline std::vector<double> random_vector(std::size_t d, Rng& rng, double scale = 3.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    std::vector<double> v(d);
    for (auto& x : v) x = u(rng);
    return v;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("fsnt_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

}  // namespace fsnt::fixture
