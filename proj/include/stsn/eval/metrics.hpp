#pragma once

#include <map>
#include <string>
#include <vector>

#include "stsn/data/corpus.hpp"

namespace stsn {

struct Counts {
  long tp = 0;
  long fp = 0;
  long fn = 0;

  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const Counts&, const Counts&) = default;
};

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// P = tp / (tp + fp), R = tp / (tp + fn), F1 = 2PR / (P + R); each 0 when
/// its denominator is 0.
Prf prf(const Counts& c);

struct TaskMetrics {
  Counts counts;                         // pooled over types
  Prf micro;
  Prf macro;                             // mean per-type F1 over gold types
  std::map<std::string, Counts> per_type;
  std::vector<std::string> predicted_only_types;  // never in gold
};

struct MetricsReport {
  int sentences = 0;
  TaskMetrics ner;
  TaskMetrics re;
  TaskMetrics re_plus;
};

/// Matches predictions to gold sentences by id; every id in [0, gold.size())
/// must appear exactly once. Duplicates inside a record are ignored.
MetricsReport evaluate(const Corpus& gold, const std::vector<PredictionRecord>& predictions);

/// Same, with predictions already aligned to gold by position.
MetricsReport evaluate_aligned(const std::vector<const SentenceExample*>& gold,
                               const std::vector<const PredictionRecord*>& predictions);

/// Throws ConfigError for match modes other than "boundaries".
void check_match_mode(const std::string& mode);

struct EntityLengthBucket {
  std::string label;  // "1-2", "3-4", ..., ">10"
  int min_width = 0;
  int max_width = 0;  // inclusive
  long gold_entities = 0;
  TaskMetrics ner;
};

/// Gold and predicted mentions are both restricted to the bucket's widths.
std::vector<EntityLengthBucket> breakdown_by_entity_length(
    const Corpus& gold, const std::vector<PredictionRecord>& predictions);

struct SentenceLengthBucket {
  std::string label;  // "0-19", "20-34", "35-49", ">=50"
  int min_length = 0;
  int max_length = 0;  // inclusive; -1 for no bound
  MetricsReport metrics;
};

std::vector<SentenceLengthBucket> breakdown_by_sentence_length(
    const Corpus& gold, const std::vector<PredictionRecord>& predictions);

/// Index of the bucket holding a sentence of `length` tokens.
int sentence_length_bucket(int length);
/// Index of the bucket holding a mention of `width` tokens (5 means ">10").
int entity_length_bucket(int width);

}  // namespace stsn
