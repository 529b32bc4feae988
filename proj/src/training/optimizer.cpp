#include "stsn/training/optimizer.hpp"

#include <algorithm>
#include <cmath>

namespace stsn {

double lr_schedule(std::int64_t step, std::int64_t total_steps, double warmup_ratio, double base_lr) {
  if (total_steps <= 0) return 0.0;
  step = std::clamp<std::int64_t>(step, 0, total_steps);
  const auto warmup = static_cast<std::int64_t>(std::floor(warmup_ratio * static_cast<double>(total_steps)));
  if (step < warmup) return base_lr * static_cast<double>(step) / static_cast<double>(warmup);
  if (total_steps == warmup) return base_lr;
  return base_lr * static_cast<double>(total_steps - step) /
         static_cast<double>(total_steps - warmup);
}

double clip_gradient_norm(ParameterStore& store, double max_norm) {
  double sq = 0.0;
  for (const auto& p : store) {
    if (p->trainable) sq += p->grad.squaredNorm();
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / (norm + 1e-6);
    for (auto& p : store) {
      if (p->trainable) p->grad *= factor;
    }
  }
  return norm;
}

void AdamW::step(ParameterStore& store, double lr) {
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(options_.beta1, t);
  const double c2 = 1.0 - std::pow(options_.beta2, t);
  for (auto& p : store) {
    if (!p->trainable) continue;
    if (p->decay && options_.weight_decay > 0.0) p->value *= 1.0 - lr * options_.weight_decay;
    p->first_moment = options_.beta1 * p->first_moment + (1.0 - options_.beta1) * p->grad;
    p->second_moment =
        options_.beta2 * p->second_moment + (1.0 - options_.beta2) * p->grad.cwiseAbs2();
    p->value.array() -= lr * (p->first_moment.array() / c1) /
                        ((p->second_moment.array() / c2).sqrt() + options_.eps);
  }
}

}  // namespace stsn
