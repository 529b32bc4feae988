// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include "metric_oracle.hpp"
#include "stsn/cli/commands.hpp"
#include "stsn/data/spans.hpp"
#include "stsn/data/synthetic.hpp"
#include "stsn/stack/stack.hpp"
#include "stsn/tagging/codec.hpp"
#include "stsn/training/checkpoint.hpp"
#include "stsn/training/trainer.hpp"
#include "support.hpp"

using namespace stsn;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

/// Records the first failed expectation.
class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && pass_) {
      pass_ = false;
      failure_ = what;
    }
  }
  Outcome outcome(const std::string& summary) const {
    return {pass_, pass_ ? summary : failure_};
  }

 private:
  bool pass_ = true;
  std::string failure_;
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[200];
  std::snprintf(buf, sizeof buf, format, a, b, c);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome codec_round_trip() {
  Checker c;
  const auto start = Clock::now();
  std::mt19937_64 rng(1001);
  int overlapping = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = test::uniform_int(rng, 1, 30);
    const auto entities = test::random_legal_entities(n, rng);
    for (const auto& a : entities) {
      for (const auto& b : entities) overlapping += !(a == b) && a.overlaps(b);
    }
    c.expect(decode_bio(encode_bio(n, entities)) == entities,
             "round trip failed at trial " + std::to_string(trial));
  }
  c.expect(overlapping > 0, "no overlapping pairs were generated");
  const TagSequence expect = {"B-AE/B-DRUG", "I-AE", "O", "O", "O"};
  c.expect(encode_bio(5, {{"AE", 0, 2}, {"DRUG", 0, 1}}) == expect,
           "drug/effect example encodes differently");
  const double elapsed = seconds_since(start);
  c.expect(elapsed < 5.0, fmt("took %.2f s", elapsed));
  return c.outcome(fmt("1000 sets, %.0f overlapping pairs, %.3f s", overlapping / 2.0, elapsed));
}

// ---------------------------------------------------------------------------

Outcome attention_correctness() {
  Checker c;
  std::mt19937_64 rng(1002);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int heads = test::uniform_int(rng, 1, 4);
    const int d = heads * test::uniform_int(rng, 1, 4);
    const int n = test::uniform_int(rng, 1, 10);
    const int keys = test::uniform_int(rng, 1, 10);
    std::vector<std::uint8_t> mask(static_cast<size_t>(keys));
    for (auto& m : mask) m = test::uniform_int(rng, 0, 3) != 0;
    mask[static_cast<size_t>(test::uniform_int(rng, 0, keys - 1))] = 1;
    ParameterStore store;
    const auto p = AttentionUnitParams::create(store, "u", d, rng);
    ad::Tape tape;
    const auto q = tape.constant(test::random_matrix(n, d, rng, 3.0));
    const auto kv = tape.constant(test::random_matrix(keys, d, rng, 3.0));
    const auto out = multi_head_attention(q, kv, kv, p, mask, {heads, 0.0, 1e-5, nullptr});
    for (const auto& probs : out.probabilities) {
      const Matrix& a = probs.value();
      for (Eigen::Index r = 0; r < a.rows(); ++r) worst = std::max(worst, std::abs(a.row(r).sum() - 1));
      for (int k = 0; k < keys; ++k) {
        if (!mask[static_cast<size_t>(k)]) {
          c.expect(a.col(k).isZero(0.0), "masked key received weight at trial " +
                                             std::to_string(trial));
        }
      }
    }
  }
  c.expect(worst <= 1e-6, fmt("row sum off by %.3g", worst));

  // Identity projections on an identity input: each row is a softmax of
  // [1, 0] / sqrt(2).
  ParameterStore store;
  auto p = AttentionUnitParams::create(store, "u", 2, rng);
  for (auto* w : {p.query, p.key, p.value, p.output}) w->value = Matrix::Identity(2, 2);
  ad::Tape tape;
  const auto x = tape.constant(Matrix::Identity(2, 2));
  const auto out = multi_head_attention(x, x, x, p, {}, {1, 0.0, 1e-5, nullptr});
  Matrix hand(2, 2);
  hand << 0.6697615493266569, 0.3302384506733431, 0.3302384506733431, 0.6697615493266569;
  const double err = (out.probabilities[0].value() - hand).cwiseAbs().maxCoeff();
  c.expect(err <= 1e-6, fmt("hand 2x2 case off by %.3g", err));
  return c.outcome(fmt("100 instances, max row-sum error %.2g; 2x2 case error %.2g", worst, err));
}

// ---------------------------------------------------------------------------

Outcome gradient_check() {
  Checker c;
  const auto start = Clock::now();
  SentenceExample ex;
  ex.tokens = {"alpha", "beta", "gamma"};
  const EntityMention a{"A", 0, 1}, b{"B", 2, 3};
  ex.entities = {a, b};
  ex.relations = {{a, b, "R"}};
  const Corpus corpus = {ex};

  Config config = test::tiny_config(8, 2, 2, 3, 3);
  config.set("encoder.max_positions", "5");
  config.set("decoder.max_width", "3");
  StsnModel model(config, build_vocabularies(corpus), corpus);
  const int indices[] = {0};
  const auto batch = make_batch(corpus, indices, {100, 100, 3}, 7);

  auto loss = [&] {
    ad::Tape tape;
    return model.forward_batch(tape, batch).joint.value()(0, 0);
  };
  model.parameters().zero_grad();
  {
    ad::Tape tape;
    tape.backward(model.forward_batch(tape, batch).joint);
  }
  const auto groups = test::finite_difference_check(model.parameters(), loss, 1e-4);
  double worst = 0.0;
  std::string worst_name;
  for (const auto& g : groups) {
    if (g.relative_error > worst) {
      worst = g.relative_error;
      worst_name = g.name;
    }
  }
  const double elapsed = seconds_since(start);
  c.expect(worst < 1e-4, "relative error " + fmt("%.3g", worst) + " in " + worst_name);
  c.expect(elapsed < 120.0, fmt("took %.1f s", elapsed));
  return c.outcome(std::to_string(groups.size()) + " parameter groups, max relative error " +
                   fmt("%.2g (", worst) + worst_name + fmt("), %.2f s", elapsed));
}

// ---------------------------------------------------------------------------

Config overfit_config() {
  Config config = test::tiny_config(16, 2, 2, 16, 16);
  config.set("train.epochs", "300");
  config.set("train.learning_rate", "1e-3");
  return config;
}

struct OverfitRun {
  std::string log;
  int epochs = 0;
  bool converged = false;
  double seconds = 0.0;
  std::vector<PredictionRecord> predictions;
  std::string checkpoint;
};

OverfitRun train_overfit(const Corpus& corpus) {
  const auto start = Clock::now();
  const Config config = overfit_config();
  StsnModel model(config, build_vocabularies(corpus), corpus);
  std::ostringstream log;
  OverfitRun run;
  TrainerOptions options;
  options.step_log = &log;
  options.dev = &corpus;
  options.on_epoch = [&](const EpochSummary& s) {
    run.epochs = s.epoch + 1;
    run.converged = s.dev->ner.micro.f1 == 1.0 && s.dev->re_plus.micro.f1 == 1.0;
    return !run.converged;
  };
  Trainer(model, TrainingConfig::from_config(config)).train(corpus, options);
  run.log = log.str();
  run.predictions = model.predict_corpus(corpus);
  run.checkpoint = serialize_checkpoint(model, {});
  run.seconds = seconds_since(start);
  return run;
}

Outcome overfit(const Corpus& corpus, const OverfitRun& run) {
  Checker c;
  int overlapping = 0, relations = 0;
  for (const auto& ex : corpus) {
    relations += static_cast<int>(ex.relations.size());
    bool any = false;
    for (const auto& a : ex.entities) {
      for (const auto& b : ex.entities) any = any || (!(a == b) && a.overlaps(b));
    }
    overlapping += any;
  }
  c.expect(corpus.size() == 20, "fixture does not have 20 sentences");
  c.expect(overlapping >= 3, "fixture has fewer than 3 overlapping sentences");
  c.expect(relations >= 5, "fixture has fewer than 5 relations");
  c.expect(run.converged, "NER/RE+ F1 did not reach 1.0 within 300 epochs");
  for (size_t i = 0; i < corpus.size(); ++i) {
    c.expect(run.predictions[i].entities == corpus[i].entities &&
                 run.predictions[i].relations == corpus[i].relations,
             "predictions differ from gold on sentence " + std::to_string(i));
  }
  c.expect(run.seconds < 300.0, fmt("took %.1f s", run.seconds));
  return c.outcome(fmt("F1 = 1.0 for NER and RE+ after %.0f epochs, %.1f s", run.epochs,
                       run.seconds));
}

// ---------------------------------------------------------------------------

Outcome metric_oracle() {
  Checker c;
  std::mt19937_64 rng(1005);
  const auto re_count = [](const Corpus& g, const std::vector<PredictionRecord>& p) {
    return test::oracle_relations(g, p, test::same_boundaries);
  };
  const auto re_plus_count = [](const Corpus& g, const std::vector<PredictionRecord>& p) {
    return test::oracle_relations(g, p, test::same_typed);
  };
  auto close = [](double x, double y) { return std::abs(x - y) <= 1e-12; };
  for (int trial = 0; trial < 500; ++trial) {
    const auto [gold, pred] = test::random_evaluation_case(rng);
    const auto r = evaluate(gold, pred);
    const auto ner = test::oracle_ner(gold, pred);
    const auto re = re_count(gold, pred);
    const auto re_plus = re_plus_count(gold, pred);
    const std::string at = " at trial " + std::to_string(trial);
    c.expect(test::counts_equal(r.ner.counts, ner), "NER counts" + at);
    c.expect(test::counts_equal(r.re.counts, re), "RE counts" + at);
    c.expect(test::counts_equal(r.re_plus.counts, re_plus), "RE+ counts" + at);
    c.expect(close(r.ner.micro.f1, test::oracle_f1(ner)), "NER micro F1" + at);
    c.expect(close(r.re.micro.f1, test::oracle_f1(re)), "RE micro F1" + at);
    c.expect(close(r.re_plus.micro.f1, test::oracle_f1(re_plus)), "RE+ micro F1" + at);
    c.expect(close(r.ner.macro.f1, test::oracle_macro_f1(gold, pred, false, test::oracle_ner)),
             "NER macro F1" + at);
    c.expect(close(r.re.macro.f1, test::oracle_macro_f1(gold, pred, true, re_count)),
             "RE macro F1" + at);
    c.expect(close(r.re_plus.macro.f1, test::oracle_macro_f1(gold, pred, true, re_plus_count)),
             "RE+ macro F1" + at);
    c.expect(r.re_plus.counts.tp <= r.re.counts.tp, "RE+ TP exceeds RE TP" + at);
  }
  return c.outcome("500 instances match the brute-force matcher");
}

// ---------------------------------------------------------------------------

std::size_t hand_stack_count(std::size_t d, std::size_t layers, bool no_erla, bool no_stack) {
  const std::size_t init = 3 * (d * d + d);
  if (no_stack) return init;
  const std::size_t unit = 4 * d * d + (d * d + d) + (d * d + d) + 4 * d;
  const std::size_t fusion = no_erla ? 0 : 2 * d * d + d;
  return init + layers * (fusion + 3 * unit);
}

std::size_t hand_decoder_count(std::size_t d, std::size_t l, std::size_t e, std::size_t r,
                               std::size_t ld, std::size_t wd, std::size_t width) {
  const std::size_t es = (d + ld) * 2 + wd;
  const std::size_t er = es * 2 + (d + ld);
  return (d * l + l) + l * ld + width * wd + (es * e + e) + (er * r + r) + (d + ld);
}

Outcome architecture_ledger(const Corpus& corpus) {
  Checker c;
  DecoderOptions wide;
  auto no_label = wide;
  no_label.no_label_embedding = true;
  c.expect(span_representation_dim(768, wide) - span_representation_dim(768, no_label) == 300,
           "dim(E_s) does not shrink by 300");
  c.expect(relation_representation_dim(768, wide) - relation_representation_dim(768, no_label) ==
               750,
           "dim(E_r) does not shrink by 750");
  c.expect(span_representation_dim(768, wide) == 1986, "dim(E_s) at d=768 is not 1986");
  c.expect(relation_representation_dim(768, wide) == 4890, "dim(E_r) at d=768 is not 4890");

  // Full-size closed forms, including the stack at d=768 with the default
  // four layers.
  const StackOptions defaults;
  c.expect(StackParams::scalar_count(768, defaults) == hand_stack_count(768, 4, false, false),
           "stack count at d=768");

  const auto vocabs = build_vocabularies(corpus);
  const auto l = vocabs.labels.size();
  const auto e = vocabs.entity_types.size();
  const auto r = vocabs.relation_types.size();
  const std::size_t d = 16, ld = 150, wd = 150;
  const auto pieces = build_subtoken_vocabulary(corpus, 4).size();
  std::string summary;
  for (const auto& variant : cli::ablation_variants()) {
    Config config = test::tiny_config(static_cast<int>(d), 4, 2, static_cast<int>(ld),
                                      static_cast<int>(wd));
    for (const auto& o : variant.overrides) config.set_assignment(o);
    const auto layers = static_cast<std::size_t>(config.get_int("stack.layers"));
    const bool no_erla = config.get_bool("ablation.no_erla");
    const bool no_stack = config.get_bool("ablation.no_stack");
    const bool no_label_embedding = config.get_bool("ablation.no_label_embedding");
    const std::size_t encoder = pieces * d + 40 * d + 6 * d * d + 6 * d;
    const std::size_t expect = encoder + hand_stack_count(d, layers, no_erla, no_stack) +
                               hand_decoder_count(d, l, e, r, no_label_embedding ? 0 : ld, wd, 10);
    const StsnModel model(config, vocabs, corpus);
    const auto got = model.parameters().scalar_count();
    c.expect(got == expect, variant.name + ": " + std::to_string(got) + " parameters, expected " +
                                std::to_string(expect));
    summary += (summary.empty() ? "" : ", ") + variant.name + "=" + std::to_string(got);
  }

  // Without E&R-L-A the tagging loss cannot reach the initial entity stream.
  auto grad_into_entity = [&](bool ablate) {
    Config config = test::tiny_config(8, 2, 2, 4, 4);
    if (ablate) config.set("ablation.no_erla", "true");
    const StsnModel model(config, vocabs, corpus);
    const int indices[] = {0, 1, 2};
    const auto batch = make_batch(corpus, indices, {5, 5, 10}, 3);
    ad::Tape tape;
    std::vector<SentenceTrace> traces;
    ForwardOptions options;
    options.traces = &traces;
    const auto loss = model.forward_batch(tape, batch, options);
    tape.backward(loss.tagging);
    double norm = 0.0;
    for (const auto& t : traces) {
      const Matrix& g = t.streams.initial.entity.grad();
      if (g.size()) norm += g.squaredNorm();
    }
    return std::sqrt(norm);
  };
  const double ablated = grad_into_entity(true);
  const double full = grad_into_entity(false);
  c.expect(ablated == 0.0, fmt("-E&R-L-A gradient into H_E^0 is %.3g", ablated));
  c.expect(full > 0.0, "full model sends no gradient into H_E^0");
  return c.outcome(summary + fmt("; dL_L/dH_E^0 norm %.0f without E&R-L-A, %.3g with", ablated,
                                 full));
}

// ---------------------------------------------------------------------------

Outcome teacher_forcing(const Corpus& corpus) {
  Checker c;
  const Config config = test::tiny_config(8, 1, 2, 4, 4);
  const StsnModel model(config, build_vocabularies(corpus), corpus);
  const int labels = static_cast<int>(model.vocabularies().labels.size());
  const int indices[] = {0, 1, 2, 3};
  const auto batch = make_batch(corpus, indices, {10, 10, 10}, 4);

  struct Result {
    double span = 0, relation = 0, tagging = 0;
    std::vector<SentenceTrace> traces;
  };
  auto run = [&](LabelMode mode, int forced) {
    Result r;
    ad::Tape tape;
    ForwardOptions options;
    options.label_mode = mode;
    options.traces = &r.traces;
    if (forced >= 0) {
      options.tag_logit_offset = [&](int, Matrix& offset) { offset.col(forced).array() += 1e3; };
    }
    const auto loss = model.forward_batch(tape, batch, options);
    r.span = loss.span.value()(0, 0);
    r.relation = loss.relation.value()(0, 0);
    r.tagging = loss.tagging.value()(0, 0);
    return r;
  };

  const auto base = run(LabelMode::kTraining, -1);
  for (int forced = 0; forced < labels; ++forced) {
    const auto perturbed = run(LabelMode::kTraining, forced);
    c.expect(perturbed.span == base.span && perturbed.relation == base.relation,
             "span/relation loss moved when tag logits were perturbed");
    for (size_t i = 0; i < perturbed.traces.size(); ++i) {
      const auto& t = perturbed.traces[i];
      c.expect(t.label_rows == t.gold_labels, "training lookups are not the gold labels");
      c.expect(t.predicted_labels == std::vector<int>(t.predicted_labels.size(), forced),
               "perturbation did not change the predictions");
    }
    const auto inference = run(LabelMode::kInference, forced);
    for (const auto& t : inference.traces) {
      c.expect(t.label_rows == t.predicted_labels, "inference lookups are not the predictions");
    }
  }
  for (int i = 0; i < 4; ++i) {
    PredictionTrace trace;
    model.predict(corpus[static_cast<size_t>(i)].tokens, i, &trace);
    c.expect(trace.label_rows == trace.predicted_labels,
             "predict() looks up labels other than its predictions");
  }
  return c.outcome("gold lookups in training under " + std::to_string(labels) +
                   " forced labels; predicted lookups at inference");
}

// ---------------------------------------------------------------------------

Outcome span_counts() {
  Checker c;
  long checked = 0;
  for (int n = 0; n <= 50; ++n) {
    for (int width = 1; width <= 12; ++width) {
      long expect = 0;
      for (int w = 1; w <= std::min(width, n); ++w) expect += n - w + 1;
      const auto spans = enumerate_spans(n, width);
      c.expect(static_cast<long>(spans.size()) == expect,
               "n=" + std::to_string(n) + " L=" + std::to_string(width));
      for (const auto& s : spans) {
        c.expect(s.start >= 0 && s.end <= n && s.width() >= 1 && s.width() <= width,
                 "span out of range");
      }
      ++checked;
    }
  }
  return c.outcome(std::to_string(checked) + " (n, L) combinations");
}

// ---------------------------------------------------------------------------

Outcome determinism(const Corpus& corpus, const OverfitRun& first) {
  Checker c;
  const auto second = train_overfit(corpus);
  c.expect(!first.log.empty(), "empty loss log");
  c.expect(first.log == second.log, "loss logs differ between seeded runs");
  c.expect(first.checkpoint == second.checkpoint, "trained weights differ between seeded runs");

  const auto loaded = deserialize_checkpoint(first.checkpoint);
  const Config config = overfit_config();
  std::vector<int> indices(corpus.size());
  for (size_t i = 0; i < indices.size(); ++i) indices[i] = static_cast<int>(i);
  const auto batch = make_batch(corpus, indices, {20, 20, 10}, 9);
  auto forward = [&](const StsnModel& model) {
    ad::Tape tape;
    std::vector<SentenceTrace> traces;
    ForwardOptions options;
    options.traces = &traces;
    const double joint = model.forward_batch(tape, batch, options).joint.value()(0, 0);
    std::vector<Matrix> out;
    for (const auto& t : traces) {
      out.push_back(t.tag_logits.value());
      out.push_back(t.span_logits.value());
      if (t.relation_logits.valid()) out.push_back(t.relation_logits.value());
    }
    return std::pair{joint, out};
  };
  const auto reloaded = forward(loaded.model);
  c.expect(serialize_checkpoint(loaded.model, {}) == first.checkpoint,
           "re-serialized checkpoint differs");
  c.expect(loaded.config == config, "checkpoint config differs");
  c.expect(predictions_to_json(loaded.model.predict_corpus(corpus)) ==
               predictions_to_json(first.predictions),
           "reloaded predictions differ");
  StsnModel again = std::move(deserialize_checkpoint(first.checkpoint).model);
  const auto twice = forward(again);
  c.expect(reloaded.first == twice.first && reloaded.second == twice.second,
           "forward pass after reload is not bit-identical");
  return c.outcome(std::to_string(std::count(first.log.begin(), first.log.end(), '\n')) +
                   " identical step records; reloaded forward bit-identical");
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](const char* id, const char* name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %s %s: %s\n", id, o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  };

  const auto fixture = make_synthetic_corpus({});
  OverfitRun first;
  report("AC1", "codec round trip", codec_round_trip);
  report("AC2", "attention correctness", attention_correctness);
  report("AC3", "gradient check", gradient_check);
  report("AC4", "overfit fixture", [&] {
    first = train_overfit(fixture);
    return overfit(fixture, first);
  });
  report("AC5", "metric oracle", metric_oracle);
  report("AC6", "architecture ledger", [&] { return architecture_ledger(fixture); });
  report("AC7", "teacher forcing", [&] { return teacher_forcing(fixture); });
  report("AC8", "span enumeration", span_counts);
  report("AC9", "determinism", [&] { return determinism(fixture, first); });
  std::printf("%d of 9 criteria passed\n", 9 - failures);
  return failures == 0 ? 0 : 1;
}
