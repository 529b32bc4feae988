#include "stsn/training/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "stsn/errors.hpp"

namespace stsn {

namespace {

constexpr std::uint64_t kShuffleStream = 2;
constexpr std::uint64_t kSamplingStream = 3;
constexpr std::uint64_t kDropoutStream = 4;

std::string number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string StepRecord::to_json() const {
  return "{\"epoch\": " + std::to_string(epoch) + ", \"step\": " + std::to_string(step) +
         ", \"L_L\": " + number(tagging) + ", \"L_E\": " + number(span) +
         ", \"L_R\": " + number(relation) + ", \"L_joint\": " + number(joint) +
         ", \"lr\": " + number(lr) + "}";
}

std::int64_t total_training_steps(int sentences, const TrainingConfig& config) {
  const std::int64_t per_epoch = (sentences + config.batch_size - 1) / config.batch_size;
  return per_epoch * config.epochs;
}

Trainer::Trainer(StsnModel& model, TrainingConfig config)
    : model_(model),
      config_(config),
      optimizer_({config.adam_beta1, config.adam_beta2, config.adam_eps, config.weight_decay}) {
  config_.validate();
}

TrainResult Trainer::train(const Corpus& train, const TrainerOptions& options) {
  if (train.empty()) throw ValidationError("training corpus is empty");
  const int max_width = model_.options().decoder.max_width;
  for (size_t i = 0; i < train.size(); ++i) {
    for (const auto& e : train[i].entities) {
      if (e.width() > max_width) {
        throw ValidationError("sentence " + std::to_string(i) + ": mention [" +
                              std::to_string(e.start) + ", " + std::to_string(e.end) +
                              ") is wider than decoder.max_width " + std::to_string(max_width));
      }
    }
  }
  if (!options.output_dir.empty()) std::filesystem::create_directories(options.output_dir);

  const SamplingOptions sampling{config_.negative_spans, config_.negative_pairs, max_width};
  const auto total = total_training_steps(static_cast<int>(train.size()), config_);
  std::vector<int> order(train.size());
  TrainResult result;

  for (int epoch = 0; epoch < config_.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 shuffle_rng(mix_seed(mix_seed(config_.seed, kShuffleStream),
                                         static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double joint_sum = 0.0;
    int batches = 0;
    for (size_t begin = 0; begin < order.size(); begin += static_cast<size_t>(config_.batch_size)) {
      const auto end = std::min(order.size(), begin + static_cast<size_t>(config_.batch_size));
      const std::span<const int> indices(order.data() + begin, end - begin);
      const auto step = result.state.step;
      const auto batch = make_batch(train, indices, sampling,
                                    mix_seed(mix_seed(config_.seed, kSamplingStream),
                                             static_cast<std::uint64_t>(step)));
      std::mt19937_64 dropout_rng(mix_seed(mix_seed(config_.seed, kDropoutStream),
                                           static_cast<std::uint64_t>(step)));
      ad::Tape tape;
      ForwardOptions fo;
      fo.dropout_rng = &dropout_rng;
      const auto loss = model_.forward_batch(tape, batch, fo);

      StepRecord record;
      record.epoch = epoch;
      record.step = step;
      record.tagging = loss.tagging.value()(0, 0);
      record.span = loss.span.value()(0, 0);
      record.relation = loss.relation.value()(0, 0);
      record.joint = loss.joint.value()(0, 0);
      record.lr = lr_schedule(step, total, config_.warmup_ratio, config_.learning_rate);
      if (!std::isfinite(record.joint)) {
        std::string sentences;
        for (int i : indices) sentences += (sentences.empty() ? "" : ",") + std::to_string(i);
        throw NonFiniteLoss("non-finite loss at epoch " + std::to_string(epoch) + " step " +
                            std::to_string(step) + " (L_L=" + number(record.tagging) +
                            " L_E=" + number(record.span) + " L_R=" + number(record.relation) +
                            ") on sentences [" + sentences + "]");
      }

      model_.parameters().zero_grad();
      tape.backward(loss.joint);
      clip_gradient_norm(model_.parameters(), config_.grad_clip);
      optimizer_.step(model_.parameters(), record.lr);
      ++result.state.step;

      if (options.step_log) *options.step_log << record.to_json() << '\n';
      result.steps.push_back(record);
      joint_sum += record.joint;
      ++batches;
    }
    result.state.epoch = epoch + 1;

    EpochSummary summary;
    summary.epoch = epoch;
    summary.mean_joint = joint_sum / std::max(1, batches);
    if (options.dev != nullptr) {
      summary.dev = evaluate(*options.dev, model_.predict_corpus(*options.dev));
      const double score = summary.dev->re_plus.micro.f1;
      if (score > result.state.best_score) {
        result.state.best_score = score;
        result.best_epoch = epoch;
        if (!options.output_dir.empty()) {
          save_checkpoint(options.output_dir / "best.ckpt", model_, result.state);
        }
      }
    }
    result.epochs.push_back(summary);
    if (options.on_epoch && !options.on_epoch(summary)) break;
  }
  if (!options.output_dir.empty()) {
    save_checkpoint(options.output_dir / "last.ckpt", model_, result.state);
  }
  return result;
}

}  // namespace stsn
