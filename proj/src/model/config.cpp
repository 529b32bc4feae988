#include "stsn/model/config.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "stsn/data/corpus.hpp"
#include "stsn/errors.hpp"

namespace stsn {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Config::Config() {
  values_ = {
      {"seed", std::int64_t{13}},
      {"encoder.kind", std::string("test")},
      {"encoder.model_id", std::string()},
      {"encoder.dim", std::int64_t{768}},
      {"encoder.heads", std::int64_t{2}},
      {"encoder.subtoken_chars", std::int64_t{4}},
      {"encoder.max_positions", std::int64_t{130}},
      {"encoder.trainable", true},
      {"stack.layers", std::int64_t{4}},
      {"stack.heads", std::int64_t{8}},
      {"stack.dropout", 0.1},
      {"stack.layer_norm_eps", 1e-5},
      {"ablation.no_erla", false},
      {"ablation.no_stack", false},
      {"ablation.no_label_embedding", false},
      {"decoder.label_dim", std::int64_t{150}},
      {"decoder.width_dim", std::int64_t{150}},
      {"decoder.max_width", std::int64_t{10}},
      {"decoder.relation_threshold", 0.4},
      {"decoder.relation_loss_average", std::string("pair_type")},
      {"train.epochs", std::int64_t{100}},
      {"train.learning_rate", 5e-5},
      {"train.warmup_ratio", 0.1},
      {"train.weight_decay", 1e-2},
      {"train.batch_size", std::int64_t{4}},
      {"train.grad_clip", 1.0},
      {"train.adam_beta1", 0.9},
      {"train.adam_beta2", 0.999},
      {"train.adam_eps", 1e-8},
      {"train.neg_spans", std::int64_t{100}},
      {"train.neg_pairs", std::int64_t{100}},
      {"data.max_sentence_length", std::int64_t{128}},
      {"eval.match", std::string("boundaries")},
  };
}

bool Config::has(std::string_view key) const { return values_.find(key) != values_.end(); }

const Config::Value& Config::lookup(std::string_view key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  return it->second;
}

void Config::set(std::string_view key, std::string_view raw) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  const std::string_view text = trim(raw);
  const std::string where = "config key '" + std::string(key) + "': ";
  std::visit(
      [&](auto& current) {
        using T = std::decay_t<decltype(current)>;
        if constexpr (std::is_same_v<T, std::int64_t>) {
          std::int64_t v = 0;
          auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
          if (ec != std::errc() || end != text.data() + text.size()) {
            throw ConfigError(where + "expected an integer, got '" + std::string(text) + "'");
          }
          current = v;
        } else if constexpr (std::is_same_v<T, double>) {
          std::string s(text);
          char* end = nullptr;
          const double v = std::strtod(s.c_str(), &end);
          if (s.empty() || end != s.c_str() + s.size()) {
            throw ConfigError(where + "expected a number, got '" + s + "'");
          }
          current = v;
        } else if constexpr (std::is_same_v<T, bool>) {
          if (text == "true" || text == "1") {
            current = true;
          } else if (text == "false" || text == "0") {
            current = false;
          } else {
            throw ConfigError(where + "expected true or false, got '" + std::string(text) + "'");
          }
        } else {
          current = std::string(text);
        }
      },
      it->second);
}

void Config::set_assignment(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
  }
  set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void Config::merge_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view body = line;
    if (auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    body = trim(body);
    if (body.empty()) continue;
    try {
      set_assignment(body);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(number) + ": " + e.what());
    }
  }
}

void Config::merge_file(const std::filesystem::path& path) { merge_text(read_text_file(path)); }

std::int64_t Config::get_int(std::string_view key) const {
  if (auto* v = std::get_if<std::int64_t>(&lookup(key))) return *v;
  throw ConfigError("config key '" + std::string(key) + "' is not an integer");
}

double Config::get_double(std::string_view key) const {
  if (auto* v = std::get_if<double>(&lookup(key))) return *v;
  throw ConfigError("config key '" + std::string(key) + "' is not a number");
}

bool Config::get_bool(std::string_view key) const {
  if (auto* v = std::get_if<bool>(&lookup(key))) return *v;
  throw ConfigError("config key '" + std::string(key) + "' is not a boolean");
}

const std::string& Config::get_string(std::string_view key) const {
  if (auto* v = std::get_if<std::string>(&lookup(key))) return *v;
  throw ConfigError("config key '" + std::string(key) + "' is not a string");
}

std::vector<std::string> Config::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) out.push_back(k);
  return out;
}

std::string Config::to_text() const {
  std::string out;
  for (const auto& [key, value] : values_) {
    out += key + " = ";
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, std::int64_t>) {
            out += std::to_string(v);
          } else if constexpr (std::is_same_v<T, double>) {
            out += format_double(v);
          } else if constexpr (std::is_same_v<T, bool>) {
            out += v ? "true" : "false";
          } else {
            out += v;
          }
        },
        value);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

int positive_int(const Config& c, std::string_view key) {
  const auto v = c.get_int(key);
  if (v < 1 || v > (1 << 30)) {
    throw ConfigError("config key '" + std::string(key) + "' must be a positive integer");
  }
  return static_cast<int>(v);
}

int non_negative_int(const Config& c, std::string_view key) {
  const auto v = c.get_int(key);
  if (v < 0 || v > (1 << 30)) {
    throw ConfigError("config key '" + std::string(key) + "' must be non-negative");
  }
  return static_cast<int>(v);
}

}  // namespace

ModelOptions ModelOptions::from_config(const Config& c) {
  ModelOptions o;
  o.encoder.kind = c.get_string("encoder.kind");
  if (o.encoder.kind != "test" && o.encoder.kind != "precomputed") {
    throw ConfigError("encoder.kind must be 'test' or 'precomputed'");
  }
  o.encoder.model_id = c.get_string("encoder.model_id");
  o.encoder.dim = non_negative_int(c, "encoder.dim");
  o.encoder.heads = positive_int(c, "encoder.heads");
  o.encoder.subtoken_chars = positive_int(c, "encoder.subtoken_chars");
  o.encoder.max_positions = positive_int(c, "encoder.max_positions");
  o.encoder.trainable = c.get_bool("encoder.trainable");

  o.stack.layers = positive_int(c, "stack.layers");
  o.stack.heads = positive_int(c, "stack.heads");
  o.stack.dropout = c.get_double("stack.dropout");
  if (o.stack.dropout < 0.0 || o.stack.dropout >= 1.0) {
    throw ConfigError("stack.dropout must be in [0, 1)");
  }
  o.stack.layer_norm_eps = c.get_double("stack.layer_norm_eps");
  if (!(o.stack.layer_norm_eps > 0.0)) throw ConfigError("stack.layer_norm_eps must be positive");
  o.stack.no_erla = c.get_bool("ablation.no_erla");
  o.stack.no_stack = c.get_bool("ablation.no_stack");

  o.decoder.label_dim = positive_int(c, "decoder.label_dim");
  o.decoder.width_dim = positive_int(c, "decoder.width_dim");
  o.decoder.max_width = positive_int(c, "decoder.max_width");
  o.decoder.relation_threshold = c.get_double("decoder.relation_threshold");
  if (!(o.decoder.relation_threshold > 0.0 && o.decoder.relation_threshold < 1.0)) {
    throw ConfigError("decoder.relation_threshold must be in (0, 1)");
  }
  o.decoder.no_label_embedding = c.get_bool("ablation.no_label_embedding");
  const auto& avg = c.get_string("decoder.relation_loss_average");
  if (avg == "pair_type") {
    o.decoder.relation_loss_average = RelationLossAverage::kPairType;
  } else if (avg == "pair") {
    o.decoder.relation_loss_average = RelationLossAverage::kPair;
  } else {
    throw ConfigError("decoder.relation_loss_average must be 'pair_type' or 'pair'");
  }
  return o;
}

TrainingConfig TrainingConfig::from_config(const Config& c) {
  TrainingConfig t;
  t.epochs = static_cast<int>(c.get_int("train.epochs"));
  t.learning_rate = c.get_double("train.learning_rate");
  t.warmup_ratio = c.get_double("train.warmup_ratio");
  t.weight_decay = c.get_double("train.weight_decay");
  t.batch_size = static_cast<int>(c.get_int("train.batch_size"));
  t.grad_clip = c.get_double("train.grad_clip");
  t.adam_beta1 = c.get_double("train.adam_beta1");
  t.adam_beta2 = c.get_double("train.adam_beta2");
  t.adam_eps = c.get_double("train.adam_eps");
  t.negative_spans = non_negative_int(c, "train.neg_spans");
  t.negative_pairs = non_negative_int(c, "train.neg_pairs");
  t.seed = static_cast<std::uint64_t>(c.get_int("seed"));
  t.validate();
  return t;
}

void TrainingConfig::validate() const {
  auto unit = [](double v, const char* key, bool allow_zero) {
    if (!(v <= 1.0 && (allow_zero ? v >= 0.0 : v > 0.0))) {
      throw ConfigError(std::string(key) + (allow_zero ? " must be in [0, 1]" : " must be in (0, 1]"));
    }
  };
  if (epochs < 1) throw ConfigError("train.epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("train.batch_size must be at least 1");
  unit(learning_rate, "train.learning_rate", false);
  unit(warmup_ratio, "train.warmup_ratio", true);
  unit(weight_decay, "train.weight_decay", true);
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw ConfigError("train.adam_beta1 must be in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw ConfigError("train.adam_beta2 must be in [0, 1)");
  if (!(adam_eps > 0.0)) throw ConfigError("train.adam_eps must be positive");
  if (grad_clip < 0.0) throw ConfigError("train.grad_clip must be non-negative (0 disables)");
}

}  // namespace stsn
