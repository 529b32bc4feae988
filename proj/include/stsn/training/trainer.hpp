#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "stsn/eval/metrics.hpp"
#include "stsn/model/model.hpp"
#include "stsn/training/checkpoint.hpp"
#include "stsn/training/optimizer.hpp"

namespace stsn {

struct StepRecord {
  int epoch = 0;
  std::int64_t step = 0;
  double tagging = 0.0;
  double span = 0.0;
  double relation = 0.0;
  double joint = 0.0;
  double lr = 0.0;

  /// {"epoch", "step", "L_L", "L_E", "L_R", "L_joint", "lr"} on one line.
  std::string to_json() const;
  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct EpochSummary {
  int epoch = 0;
  double mean_joint = 0.0;
  std::optional<MetricsReport> dev;
};

struct TrainerOptions {
  /// Held-out sentences scored after each epoch; the best RE+ micro F1 is kept.
  const Corpus* dev = nullptr;
  /// When set, best.ckpt and last.ckpt are written here.
  std::filesystem::path output_dir;
  /// Receives one JSON line per step.
  std::ostream* step_log = nullptr;
  /// Called after each epoch; returning false stops training.
  std::function<bool(const EpochSummary&)> on_epoch;
};

struct TrainResult {
  std::vector<StepRecord> steps;
  std::vector<EpochSummary> epochs;
  TrainingState state;
  int best_epoch = -1;
};

/// Number of optimizer steps for the whole run.
std::int64_t total_training_steps(int sentences, const TrainingConfig& config);

class Trainer {
 public:
  Trainer(StsnModel& model, TrainingConfig config);

  /// Throws ValidationError when a gold mention is wider than the model's
  /// span width limit, NonFiniteLoss when a loss stops being finite.
  TrainResult train(const Corpus& train, const TrainerOptions& options = {});

 private:
  StsnModel& model_;
  TrainingConfig config_;
  AdamW optimizer_;
};

}  // namespace stsn
