#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "stsn/model/model.hpp"

namespace stsn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct TrainingState {
  std::int64_t epoch = 0;            // completed epochs
  std::int64_t step = 0;             // completed optimizer steps
  double best_score = -1.0;          // best dev RE+ micro F1 so far
};

struct LoadedCheckpoint {
  Config config;
  StsnModel model;
  TrainingState state;
};

/// Binary layout: magic, version, config text, vocabularies, backend state,
/// parameters with optimizer moments, counters, FNV-1a checksum.
std::string serialize_checkpoint(const StsnModel& model, const TrainingState& state);
LoadedCheckpoint deserialize_checkpoint(std::string_view bytes);

/// Writes atomically; throws IoError.
void save_checkpoint(const std::filesystem::path& path, const StsnModel& model,
                     const TrainingState& state);
/// Throws IoError, VersionMismatch or CorruptCheckpoint.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace stsn
