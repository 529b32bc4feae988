#include "stsn/cli/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "stsn/data/corpus.hpp"
#include "stsn/data/vocab.hpp"
#include "stsn/errors.hpp"
#include "stsn/eval/metrics.hpp"
#include "stsn/eval/report.hpp"
#include "stsn/model/model.hpp"
#include "stsn/training/checkpoint.hpp"
#include "stsn/training/trainer.hpp"

namespace stsn::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

int exit_code_for(const std::string& category) {
  static const std::set<std::string> input_problems = {
      "usage", "io", "parse", "validation", "config", "codec", "vocabulary", "checkpoint"};
  return input_problems.count(category) ? kExitUsage : kExitInternal;
}

std::vector<AblationVariant> ablation_variants() {
  std::vector<AblationVariant> v;
  for (int layers = 1; layers <= 6; ++layers) {
    v.push_back({"layers_" + std::to_string(layers),
                 std::to_string(layers) + (layers == 1 ? " AttentionLayer" : " AttentionLayers"),
                 {"stack.layers=" + std::to_string(layers)}});
  }
  v.push_back({"full", "STSN", {}});
  v.push_back({"no_label_embedding", "-LabelEmbedding", {"ablation.no_label_embedding=true"}});
  v.push_back({"no_erla", "-E&R-L-A", {"ablation.no_erla=true"}});
  v.push_back({"no_stack", "-AttentionLayer", {"ablation.no_stack=true"}});
  return v;
}

Config resolve_config(const std::string& config_path, const std::vector<std::string>& overrides) {
  Config config;
  if (!config_path.empty()) config.merge_file(config_path);
  if (const char* seed = std::getenv("STSN_SEED"); seed != nullptr && *seed != '\0') {
    config.set("seed", seed);
  }
  for (const auto& o : overrides) config.set_assignment(o);
  return config;
}

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "Key-value config file");
    app->add_option("--set", overrides, "Override one config key (key=value)")->take_all();
  }
  Config resolve() const { return resolve_config(config_path, overrides); }
};

LoadOptions load_options(const Config& config, bool check_width) {
  LoadOptions o;
  o.max_sentence_length = static_cast<int>(config.get_int("data.max_sentence_length"));
  if (check_width) o.max_entity_width = static_cast<int>(config.get_int("decoder.max_width"));
  return o;
}

void write_file(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_text_file_atomic(path, contents);
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  Common common;
  std::string train_path;
  std::string dev_path;
  std::string output_dir;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const auto config = a.common.resolve();
  check_match_mode(config.get_string("eval.match"));
  const auto training = TrainingConfig::from_config(config);
  const auto train = load_corpus(a.train_path, load_options(config, true));
  std::optional<Corpus> dev;
  if (!a.dev_path.empty()) dev = load_corpus(a.dev_path, load_options(config, false));

  const fs::path dir = a.output_dir;
  fs::create_directories(dir);
  auto vocabs = build_vocabularies(train);
  vocabs.save(dir / "vocab");
  write_file(dir / "config.txt", config.to_text());

  StsnModel model(config, std::move(vocabs), train);
  if (dev) model.check_vocabulary(*dev);
  std::ostringstream log;
  TrainerOptions options;
  options.output_dir = dir;
  options.step_log = &log;
  options.dev = dev ? &*dev : nullptr;
  Trainer trainer(model, training);
  const auto result = trainer.train(train, options);
  write_file(dir / "train_log.jsonl", log.str());

  ordered_json summary = {{"steps", result.state.step},
                          {"epochs", result.state.epoch},
                          {"parameters", model.parameters().scalar_count()},
                          {"final_loss", result.steps.empty() ? 0.0 : result.steps.back().joint},
                          {"checkpoint", (dir / "last.ckpt").string()}};
  if (dev) {
    summary["best_epoch"] = result.best_epoch;
    summary["best_dev_re_plus_f1"] = result.state.best_score;
    summary["best_checkpoint"] = (dir / "best.ckpt").string();
  }
  out << summary.dump() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct PredictArgs {
  std::string checkpoint;
  std::string input;
  std::string output;
};

int cmd_predict(const PredictArgs& a, std::ostream& out) {
  const auto loaded = load_checkpoint(a.checkpoint);
  const auto corpus = load_corpus(a.input, load_options(loaded.config, false));
  loaded.model.check_vocabulary(corpus);
  const auto text = predictions_to_json(loaded.model.predict_corpus(corpus));
  if (a.output.empty()) {
    out << text;
  } else {
    write_file(a.output, text);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  Common common;
  std::string gold;
  std::string predictions;
  std::string checkpoint;
  std::vector<std::string> breakdowns;
  std::string format = "text";
  std::string output_dir;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  if (a.predictions.empty() == a.checkpoint.empty()) {
    throw UsageError("evaluate needs exactly one of --predictions or --checkpoint");
  }
  Config config = a.common.resolve();
  std::vector<PredictionRecord> predictions;
  Corpus gold;
  if (!a.checkpoint.empty()) {
    const auto loaded = load_checkpoint(a.checkpoint);
    gold = load_corpus(a.gold, load_options(loaded.config, false));
    loaded.model.check_vocabulary(gold);
    predictions = loaded.model.predict_corpus(gold);
  } else {
    gold = load_corpus(a.gold, load_options(config, false));
    predictions = load_predictions(a.predictions);
  }
  check_match_mode(config.get_string("eval.match"));

  const auto report = evaluate(gold, predictions);
  auto combined = ordered_json::parse(report_to_json(report));
  std::string text = report_to_text(report);
  for (const auto& b : a.breakdowns) {
    if (b == "entity-length") {
      const auto buckets = breakdown_by_entity_length(gold, predictions);
      text += "\n" + entity_breakdown_to_text(buckets);
      combined["breakdown_entity_length"] = ordered_json::parse(entity_breakdown_to_json(buckets));
    } else if (b == "sentence-length") {
      const auto buckets = breakdown_by_sentence_length(gold, predictions);
      text += "\n" + sentence_breakdown_to_text(buckets);
      combined["breakdown_sentence_length"] =
          ordered_json::parse(sentence_breakdown_to_json(buckets));
    }
  }
  const std::string json = combined.dump(2) + "\n";
  if (!a.output_dir.empty()) {
    const fs::path dir = a.output_dir;
    write_file(dir / "metrics.json", report_to_json(report));
    write_file(dir / "metrics.txt", text);
    for (const auto& b : a.breakdowns) {
      if (b == "entity-length") {
        write_file(dir / "breakdown_entity_length.json",
                   entity_breakdown_to_json(breakdown_by_entity_length(gold, predictions)));
      } else {
        write_file(dir / "breakdown_sentence_length.json",
                   sentence_breakdown_to_json(breakdown_by_sentence_length(gold, predictions)));
      }
    }
  }
  out << (a.format == "json" ? json : text);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct AblateArgs {
  Common common;
  std::string train_path;
  std::string dev_path;
  std::string output_dir;
  std::string variants;
};

std::vector<AblationVariant> select_variants(const std::string& list) {
  const auto all = ablation_variants();
  if (list.empty()) return all;
  std::vector<AblationVariant> chosen;
  std::stringstream in(list);
  std::string name;
  while (std::getline(in, name, ',')) {
    if (name.empty()) continue;
    auto it = std::find_if(all.begin(), all.end(), [&](const auto& v) { return v.name == name; });
    if (it == all.end()) throw UsageError("unknown ablation variant '" + name + "'");
    chosen.push_back(*it);
  }
  if (chosen.empty()) throw UsageError("--variants selected nothing");
  return chosen;
}

int cmd_ablate(const AblateArgs& a, std::ostream& out) {
  const auto variants = select_variants(a.variants);
  const auto base = a.common.resolve();
  const auto train = load_corpus(a.train_path, load_options(base, true));
  const auto dev = a.dev_path.empty() ? train : load_corpus(a.dev_path, load_options(base, false));
  const auto vocabs = build_vocabularies(train);

  ordered_json rows = ordered_json::array();
  char buf[200];
  std::snprintf(buf, sizeof buf, "%-20s %-20s %12s %8s %8s %8s\n", "variant", "label", "parameters",
                "NER F1", "RE F1", "RE+ F1");
  std::string text = buf;
  for (const auto& v : variants) {
    Config config = base;
    for (const auto& o : v.overrides) config.set_assignment(o);
    StsnModel model(config, vocabs, train);
    model.check_vocabulary(dev);
    Trainer trainer(model, TrainingConfig::from_config(config));
    trainer.train(train);
    const auto report = evaluate(dev, model.predict_corpus(dev));
    const auto params = model.parameters().scalar_count();
    rows.push_back({{"variant", v.name},
                    {"label", v.label},
                    {"parameters", params},
                    {"ner_f1", report.ner.micro.f1},
                    {"re_f1", report.re.micro.f1},
                    {"re_plus_f1", report.re_plus.micro.f1}});
    std::snprintf(buf, sizeof buf, "%-20s %-20s %12zu %8.2f %8.2f %8.2f\n", v.name.c_str(),
                  v.label.c_str(), params, 100 * report.ner.micro.f1, 100 * report.re.micro.f1,
                  100 * report.re_plus.micro.f1);
    text += buf;
  }
  if (!a.output_dir.empty()) {
    write_file(fs::path(a.output_dir) / "ablation.json", rows.dump(2) + "\n");
    write_file(fs::path(a.output_dir) / "ablation.txt", text);
  }
  out << text;
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ValidateArgs {
  Common common;
  std::vector<std::string> inputs;
};

int cmd_validate(const ValidateArgs& a, std::ostream& out) {
  const auto config = a.common.resolve();
  ordered_json files = ordered_json::array();
  for (const auto& path : a.inputs) {
    const auto corpus = load_corpus(path, load_options(config, true));
    long entities = 0, relations = 0, overlapping = 0, tokens = 0;
    for (size_t i = 0; i < corpus.size(); ++i) {
      const auto& ex = corpus[i];
      tokens += ex.size();
      entities += static_cast<long>(ex.entities.size());
      relations += static_cast<long>(ex.relations.size());
      for (auto it = ex.entities.begin(); it != ex.entities.end(); ++it) {
        for (auto jt = std::next(it); jt != ex.entities.end(); ++jt) {
          if (it->overlaps(*jt)) ++overlapping;
        }
      }
      try {
        encode_bio(ex.size(), ex.entities);
      } catch (const Error& e) {
        throw ValidationError(path + ": record " + std::to_string(i) + ": " + e.what());
      }
    }
    ordered_json summary = {{"path", path},
                            {"sentences", corpus.size()},
                            {"tokens", tokens},
                            {"entities", entities},
                            {"relations", relations},
                            {"overlapping_pairs", overlapping}};
    if (!corpus.empty()) {
      const auto vocabs = build_vocabularies(corpus);
      summary["labels"] = vocabs.labels.size();
      summary["entity_types"] = vocabs.entity_types.size() - 1;
      summary["relation_types"] = vocabs.relation_types.size();
    }
    files.push_back(summary);
  }
  out << files.dump(2) << '\n';
  return kExitOk;
}

void print_error(std::ostream& err, const std::string& category, const std::string& message) {
  ordered_json j = {{"error", {{"category", category}, {"message", message}}}};
  err << j.dump() << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Joint entity and relation extraction with three attention streams", "stsn"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write checkpoints");
  train.common.attach(train_cmd);
  train_cmd->add_option("--train", train.train_path, "Training corpus (JSON)")->required();
  train_cmd->add_option("--dev", train.dev_path, "Development corpus for model selection");
  train_cmd->add_option("--output", train.output_dir, "Output directory")->required();

  EvaluateArgs evaluate_args;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score predictions against gold annotations");
  evaluate_args.common.attach(evaluate_cmd);
  evaluate_cmd->add_option("--gold", evaluate_args.gold, "Gold corpus (JSON)")->required();
  evaluate_cmd->add_option("--predictions", evaluate_args.predictions, "Prediction file (JSON)");
  evaluate_cmd->add_option("--checkpoint", evaluate_args.checkpoint, "Predict with this checkpoint first");
  evaluate_cmd->add_option("--breakdown", evaluate_args.breakdowns, "entity-length or sentence-length")
      ->check(CLI::IsMember({"entity-length", "sentence-length"}));
  evaluate_cmd->add_option("--format", evaluate_args.format, "Output format")
      ->check(CLI::IsMember({"text", "json"}));
  evaluate_cmd->add_option("--output", evaluate_args.output_dir, "Write reports here");

  PredictArgs predict;
  auto* predict_cmd = app.add_subcommand("predict", "Extract entities and relations");
  predict_cmd->add_option("--checkpoint", predict.checkpoint, "Checkpoint file")->required();
  predict_cmd->add_option("--input", predict.input, "Input corpus (JSON)")->required();
  predict_cmd->add_option("--output", predict.output, "Prediction file (stdout when omitted)");

  AblateArgs ablate;
  auto* ablate_cmd = app.add_subcommand("ablate", "Train and score ablation variants");
  ablate.common.attach(ablate_cmd);
  ablate_cmd->add_option("--train", ablate.train_path, "Training corpus (JSON)")->required();
  ablate_cmd->add_option("--dev", ablate.dev_path, "Scoring corpus (defaults to the training corpus)");
  ablate_cmd->add_option("--output", ablate.output_dir, "Write ablation.json and ablation.txt here");
  ablate_cmd->add_option("--variants", ablate.variants, "Comma-separated variant names");

  ValidateArgs validate;
  auto* validate_cmd = app.add_subcommand("validate-data", "Check corpus files");
  validate.common.attach(validate_cmd);
  validate_cmd->add_option("--input", validate.inputs, "Corpus file(s)")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    print_error(err, "usage", e.what());
    return kExitUsage;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train, out);
    if (evaluate_cmd->parsed()) return cmd_evaluate(evaluate_args, out);
    if (predict_cmd->parsed()) return cmd_predict(predict, out);
    if (ablate_cmd->parsed()) return cmd_ablate(ablate, out);
    if (validate_cmd->parsed()) return cmd_validate(validate, out);
  } catch (const Error& e) {
    print_error(err, e.category(), e.what());
    return exit_code_for(e.category());
  } catch (const std::filesystem::filesystem_error& e) {
    print_error(err, "io", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    print_error(err, "internal", e.what());
    return kExitInternal;
  }
  print_error(err, "usage", "no subcommand given");
  return kExitUsage;
}

}  // namespace stsn::cli
