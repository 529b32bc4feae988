#include "stsn/eval/metrics.hpp"

#include <set>
#include <tuple>

#include "stsn/errors.hpp"

namespace stsn {

Prf prf(const Counts& c) {
  Prf out;
  if (c.tp + c.fp > 0) out.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) out.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (out.precision + out.recall > 0.0) {
    out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  }
  return out;
}

namespace {

using BoundaryKey = std::tuple<std::string, int, int, int, int>;

const std::string& type_of(const EntityMention& m) { return m.type; }
const std::string& type_of(const RelationTuple& r) { return r.type; }
const std::string& type_of(const BoundaryKey& k) { return std::get<0>(k); }

BoundaryKey boundaries(const RelationTuple& r) {
  return {r.type, r.head.start, r.head.end, r.tail.start, r.tail.end};
}

template <typename Key>
void count_sentence(const std::set<Key>& gold, const std::set<Key>& pred,
                    std::map<std::string, Counts>& per_type, std::set<std::string>& gold_types) {
  for (const auto& g : gold) {
    gold_types.insert(type_of(g));
    if (pred.count(g)) {
      ++per_type[type_of(g)].tp;
    } else {
      ++per_type[type_of(g)].fn;
    }
  }
  for (const auto& p : pred) {
    if (!gold.count(p)) ++per_type[type_of(p)].fp;
  }
}

/// One-to-one matching of relation instances on their boundary keys: a key
/// seen g times in gold and p times in the prediction yields min(g, p) hits.
void count_boundaries(const RelationSet& gold, const RelationSet& pred,
                      std::map<std::string, Counts>& per_type, std::set<std::string>& gold_types) {
  std::map<BoundaryKey, std::pair<long, long>> keys;
  for (const auto& r : gold) {
    gold_types.insert(r.type);
    ++keys[boundaries(r)].first;
  }
  for (const auto& r : pred) ++keys[boundaries(r)].second;
  for (const auto& [key, n] : keys) {
    auto& c = per_type[type_of(key)];
    const long hits = std::min(n.first, n.second);
    c.tp += hits;
    c.fn += n.first - hits;
    c.fp += n.second - hits;
  }
}

TaskMetrics finish(std::map<std::string, Counts> per_type, const std::set<std::string>& gold_types) {
  TaskMetrics m;
  double f1_sum = 0.0;
  for (const auto& [type, c] : per_type) {
    m.counts += c;
    if (gold_types.count(type)) {
      f1_sum += prf(c).f1;
    } else {
      m.predicted_only_types.push_back(type);
    }
  }
  m.micro = prf(m.counts);
  if (!gold_types.empty()) {
    m.macro.f1 = f1_sum / static_cast<double>(gold_types.size());
    double p = 0.0, r = 0.0;
    for (const auto& type : gold_types) {
      const auto s = prf(per_type[type]);
      p += s.precision;
      r += s.recall;
    }
    m.macro.precision = p / static_cast<double>(gold_types.size());
    m.macro.recall = r / static_cast<double>(gold_types.size());
  }
  m.per_type = std::move(per_type);
  return m;
}

std::vector<const PredictionRecord*> align(const Corpus& gold,
                                           const std::vector<PredictionRecord>& predictions) {
  if (predictions.size() != gold.size()) {
    throw ValidationError("mismatched sentence ids: " + std::to_string(predictions.size()) +
                          " prediction records for " + std::to_string(gold.size()) +
                          " gold sentences");
  }
  std::vector<const PredictionRecord*> out(gold.size(), nullptr);
  for (const auto& p : predictions) {
    if (p.id < 0 || static_cast<size_t>(p.id) >= gold.size()) {
      throw ValidationError("mismatched sentence ids: prediction id " + std::to_string(p.id) +
                            " has no gold sentence");
    }
    if (out[static_cast<size_t>(p.id)] != nullptr) {
      throw ValidationError("mismatched sentence ids: id " + std::to_string(p.id) +
                            " appears twice");
    }
    out[static_cast<size_t>(p.id)] = &p;
  }
  return out;
}

}  // namespace

MetricsReport evaluate_aligned(const std::vector<const SentenceExample*>& gold,
                               const std::vector<const PredictionRecord*>& predictions) {
  if (gold.size() != predictions.size()) {
    throw ValidationError("mismatched sentence ids: gold and prediction counts differ");
  }
  std::map<std::string, Counts> ner, re, re_plus;
  std::set<std::string> ner_gold, re_gold, re_plus_gold;
  for (size_t i = 0; i < gold.size(); ++i) {
    const auto& g = *gold[i];
    const auto& p = *predictions[i];
    count_sentence(g.entities, p.entities, ner, ner_gold);
    count_boundaries(g.relations, p.relations, re, re_gold);
    count_sentence(g.relations, p.relations, re_plus, re_plus_gold);
  }
  MetricsReport report;
  report.sentences = static_cast<int>(gold.size());
  report.ner = finish(std::move(ner), ner_gold);
  report.re = finish(std::move(re), re_gold);
  report.re_plus = finish(std::move(re_plus), re_plus_gold);
  return report;
}

MetricsReport evaluate(const Corpus& gold, const std::vector<PredictionRecord>& predictions) {
  const auto aligned = align(gold, predictions);
  std::vector<const SentenceExample*> g;
  for (const auto& ex : gold) g.push_back(&ex);
  return evaluate_aligned(g, aligned);
}

void check_match_mode(const std::string& mode) {
  if (mode == "boundaries") return;
  if (mode == "span_head") {
    throw ConfigError("eval.match=span_head (head-word matching) is not supported; use 'boundaries'");
  }
  throw ConfigError("unknown eval.match '" + mode + "'");
}

int entity_length_bucket(int width) {
  if (width > 10) return 5;
  return (std::max(width, 1) - 1) / 2;
}

int sentence_length_bucket(int length) {
  if (length < 20) return 0;
  if (length < 35) return 1;
  if (length < 50) return 2;
  return 3;
}

std::vector<EntityLengthBucket> breakdown_by_entity_length(
    const Corpus& gold, const std::vector<PredictionRecord>& predictions) {
  const auto aligned = align(gold, predictions);
  std::vector<EntityLengthBucket> buckets;
  for (int b = 0; b < 5; ++b) {
    buckets.push_back({std::to_string(2 * b + 1) + "-" + std::to_string(2 * b + 2), 2 * b + 1,
                       2 * b + 2, 0, {}});
  }
  bool wide = false;
  for (size_t i = 0; i < gold.size(); ++i) {
    for (const auto& e : gold[i].entities) wide = wide || e.width() > 10;
    for (const auto& e : aligned[i]->entities) wide = wide || e.width() > 10;
  }
  if (wide) buckets.push_back({">10", 11, -1, 0, {}});

  for (size_t b = 0; b < buckets.size(); ++b) {
    std::map<std::string, Counts> per_type;
    std::set<std::string> gold_types;
    for (size_t i = 0; i < gold.size(); ++i) {
      EntitySet g, p;
      for (const auto& e : gold[i].entities) {
        if (entity_length_bucket(e.width()) == static_cast<int>(b)) g.insert(e);
      }
      for (const auto& e : aligned[i]->entities) {
        if (entity_length_bucket(e.width()) == static_cast<int>(b)) p.insert(e);
      }
      buckets[b].gold_entities += static_cast<long>(g.size());
      count_sentence(g, p, per_type, gold_types);
    }
    buckets[b].ner = finish(std::move(per_type), gold_types);
  }
  return buckets;
}

std::vector<SentenceLengthBucket> breakdown_by_sentence_length(
    const Corpus& gold, const std::vector<PredictionRecord>& predictions) {
  const auto aligned = align(gold, predictions);
  std::vector<SentenceLengthBucket> buckets = {
      {"0-19", 0, 19, {}}, {"20-34", 20, 34, {}}, {"35-49", 35, 49, {}}, {">=50", 50, -1, {}}};
  for (size_t b = 0; b < buckets.size(); ++b) {
    std::vector<const SentenceExample*> g;
    std::vector<const PredictionRecord*> p;
    for (size_t i = 0; i < gold.size(); ++i) {
      if (sentence_length_bucket(gold[i].size()) == static_cast<int>(b)) {
        g.push_back(&gold[i]);
        p.push_back(aligned[i]);
      }
    }
    buckets[b].metrics = evaluate_aligned(g, p);
  }
  return buckets;
}

}  // namespace stsn
