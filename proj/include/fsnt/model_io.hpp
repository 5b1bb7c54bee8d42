#pragma once

// Model file layout (all integers and reals little-endian):
//
//   "FSNT" | u32 format version | u8 estimator kind | u64 seed
//   hyperparameters | class count | preprocessing | metadata | parameters
//   | u32 CRC-32 of every preceding byte
//
// Strings are u32 length + bytes, real vectors u64 count + f64 values.
// Readers check magic, then version, then CRC.

#include <cstdint>
#include <string>
#include <vector>

#include "fsnt/learn.hpp"

namespace fsnt {

inline constexpr std::uint32_t kModelFormatVersion = 1;

std::vector<std::uint8_t> serialize_model(const TrainedModel& m);
TrainedModel deserialize_model(const std::vector<std::uint8_t>& bytes);

void save_model(const TrainedModel& m, const std::string& path);
// Throws IoFailure (unreadable), CorruptFile, VersionMismatch.
TrainedModel load_model(const std::string& path);

// Stable 64-bit identifier of a model's serialized content.
std::uint64_t model_fingerprint(const TrainedModel& m);

}  // namespace fsnt
