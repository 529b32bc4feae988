#pragma once

#include <cstdint>

#include "stsn/core/parameters.hpp"

namespace stsn {

/// Linear warmup to `base_lr` over floor(warmup_ratio * total_steps) steps,
/// then linear decay to 0 at `total_steps`.
double lr_schedule(std::int64_t step, std::int64_t total_steps, double warmup_ratio, double base_lr);

/// Scales every trainable gradient so the global L2 norm is at most
/// `max_norm` (0 disables). Returns the norm before clipping.
double clip_gradient_norm(ParameterStore& store, double max_norm);

struct AdamWOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-2;
};

/// Adam with decoupled weight decay: p -= lr * wd * p, then the bias-corrected
/// Adam step. Parameters with decay == false skip the decay term.
class AdamW {
 public:
  explicit AdamW(AdamWOptions options = {}) : options_(options) {}

  void step(ParameterStore& store, double lr);
  std::int64_t steps() const { return steps_; }
  void set_steps(std::int64_t steps) { steps_ = steps; }
  const AdamWOptions& options() const { return options_; }

 private:
  AdamWOptions options_;
  std::int64_t steps_ = 0;
};

}  // namespace stsn
