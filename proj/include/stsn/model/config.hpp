#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace stsn {

/// Flat dotted-key configuration with a fixed schema. Every key has a typed
/// default; unknown keys and ill-typed values are rejected.
class Config {
 public:
  using Value = std::variant<std::int64_t, double, bool, std::string>;

  /// The defaults, which mirror the reference hyperparameters.
  Config();

  /// Applies "key = value" lines ('#' starts a comment) over the current
  /// values.
  void merge_text(std::string_view text);
  void merge_file(const std::filesystem::path& path);
  /// Applies one override of the form "key=value".
  void set_assignment(std::string_view assignment);
  void set(std::string_view key, std::string_view value);

  std::int64_t get_int(std::string_view key) const;
  double get_double(std::string_view key) const;
  bool get_bool(std::string_view key) const;
  const std::string& get_string(std::string_view key) const;

  bool has(std::string_view key) const;
  /// "key = value" lines in key order; parses back to an equal Config.
  std::string to_text() const;
  std::vector<std::string> keys() const;

  friend bool operator==(const Config&, const Config&) = default;

 private:
  const Value& lookup(std::string_view key) const;
  std::map<std::string, Value, std::less<>> values_;
};

struct EncoderOptions {
  std::string kind = "test";  // "test" or "precomputed"
  std::string model_id;       // feature file for "precomputed"
  int dim = 768;
  int heads = 2;
  int subtoken_chars = 4;
  int max_positions = 130;
  bool trainable = true;
};

struct StackOptions {
  int layers = 4;
  int heads = 8;
  double dropout = 0.1;
  double layer_norm_eps = 1e-5;
  bool no_erla = false;   // E&R-L-A attends over the label stream itself
  bool no_stack = false;  // streams come straight from the initial projections
};

enum class RelationLossAverage {
  kPairType,  // mean over pair instances and relation types
  kPair,      // sum over types, mean over pair instances
};

struct DecoderOptions {
  int label_dim = 150;
  int width_dim = 150;
  int max_width = 10;
  double relation_threshold = 0.4;
  bool no_label_embedding = false;
  RelationLossAverage relation_loss_average = RelationLossAverage::kPairType;
};

struct ModelOptions {
  EncoderOptions encoder;
  StackOptions stack;
  DecoderOptions decoder;

  static ModelOptions from_config(const Config& config);
};

struct TrainingConfig {
  int epochs = 100;
  double learning_rate = 5e-5;
  double warmup_ratio = 0.1;
  double weight_decay = 1e-2;
  int batch_size = 4;
  double grad_clip = 1.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int negative_spans = 100;
  int negative_pairs = 100;
  std::uint64_t seed = 13;

  static TrainingConfig from_config(const Config& config);
  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

}  // namespace stsn
