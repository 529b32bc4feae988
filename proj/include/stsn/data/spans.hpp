#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "stsn/data/corpus.hpp"

namespace stsn {

/// Candidate span [start, end) with 1 <= width <= the span width threshold.
struct SpanCandidate {
  int start = 0;
  int end = 0;

  int width() const { return end - start; }
  friend bool operator==(const SpanCandidate&, const SpanCandidate&) = default;
  friend auto operator<=>(const SpanCandidate&, const SpanCandidate&) = default;
};

/// All spans of width 1..min(max_width, n), ordered by (start, width).
std::vector<SpanCandidate> enumerate_spans(int n, int max_width);

using MentionPair = std::pair<EntityMention, EntityMention>;

struct NegativeSamples {
  std::vector<SpanCandidate> spans;  // no gold mention has these boundaries
  std::vector<MentionPair> pairs;    // ordered gold pairs with no gold relation
};

/// Uniform sampling without replacement from the non-gold span pool and from
/// the unrelated ordered gold pairs. Returns fewer items when a pool is small.
NegativeSamples sample_negatives(const SentenceExample& example, int spans_per_sentence,
                                 int pairs_per_sentence, std::uint64_t seed, int max_width);

/// splitmix64 finalizer; used to derive per-sentence, per-epoch seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

/// An ordered gold pair with every relation type that holds for it.
struct LabeledPair {
  EntityMention head;
  EntityMention tail;
  std::vector<std::string> types;
};

/// Groups relations by ordered (head, tail) pair, in set order.
std::vector<LabeledPair> group_relations(const RelationSet& relations);

/// One sentence of a training batch with its span and pair candidates.
struct BatchItem {
  const SentenceExample* example = nullptr;
  std::vector<EntityMention> positive_spans;
  std::vector<SpanCandidate> negative_spans;
  std::vector<LabeledPair> positive_pairs;
  std::vector<MentionPair> negative_pairs;
};

struct TrainingBatch {
  std::vector<BatchItem> items;
  int padded_length = 0;
  /// mask[i][t] is true for real tokens, false for padding.
  std::vector<std::vector<std::uint8_t>> mask;
};

struct SamplingOptions {
  int negative_spans = 100;
  int negative_pairs = 100;
  int max_width = 10;
};

TrainingBatch make_batch(const Corpus& corpus, std::span<const int> indices,
                         const SamplingOptions& options, std::uint64_t seed);

}  // namespace stsn
