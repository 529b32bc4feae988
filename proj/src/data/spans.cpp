#include "stsn/data/spans.hpp"

#include <algorithm>
#include <iterator>
#include <random>

namespace stsn {

std::vector<SpanCandidate> enumerate_spans(int n, int max_width) {
  std::vector<SpanCandidate> spans;
  if (n <= 0 || max_width <= 0) return spans;
  for (int start = 0; start < n; ++start) {
    for (int w = 1; w <= max_width && start + w <= n; ++w) spans.push_back({start, start + w});
  }
  return spans;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

NegativeSamples sample_negatives(const SentenceExample& example, int spans_per_sentence,
                                 int pairs_per_sentence, std::uint64_t seed, int max_width) {
  NegativeSamples out;
  std::mt19937_64 rng(seed);

  std::vector<SpanCandidate> span_pool;
  for (const auto& s : enumerate_spans(example.size(), max_width)) {
    const bool gold = std::any_of(example.entities.begin(), example.entities.end(),
                                  [&](const auto& m) { return m.start == s.start && m.end == s.end; });
    if (!gold) span_pool.push_back(s);
  }
  std::sample(span_pool.begin(), span_pool.end(), std::back_inserter(out.spans),
              std::max(0, spans_per_sentence), rng);

  std::vector<MentionPair> pair_pool;
  for (const auto& a : example.entities) {
    for (const auto& b : example.entities) {
      if (a.start == b.start && a.end == b.end) continue;
      const bool related = std::any_of(example.relations.begin(), example.relations.end(),
                                       [&](const auto& r) { return r.head == a && r.tail == b; });
      if (!related) pair_pool.emplace_back(a, b);
    }
  }
  std::sample(pair_pool.begin(), pair_pool.end(), std::back_inserter(out.pairs),
              std::max(0, pairs_per_sentence), rng);
  return out;
}

std::vector<LabeledPair> group_relations(const RelationSet& relations) {
  std::vector<LabeledPair> out;
  for (const auto& r : relations) {
    if (!out.empty() && out.back().head == r.head && out.back().tail == r.tail) {
      out.back().types.push_back(r.type);
    } else {
      out.push_back({r.head, r.tail, {r.type}});
    }
  }
  return out;
}

TrainingBatch make_batch(const Corpus& corpus, std::span<const int> indices,
                         const SamplingOptions& options, std::uint64_t seed) {
  TrainingBatch batch;
  for (int index : indices) {
    const auto& ex = corpus.at(static_cast<size_t>(index));
    batch.padded_length = std::max(batch.padded_length, ex.size());
  }
  for (int index : indices) {
    const auto& ex = corpus[static_cast<size_t>(index)];
    BatchItem item;
    item.example = &ex;
    item.positive_spans.assign(ex.entities.begin(), ex.entities.end());
    item.positive_pairs = group_relations(ex.relations);
    auto negatives = sample_negatives(ex, options.negative_spans, options.negative_pairs,
                                      mix_seed(seed, static_cast<std::uint64_t>(index)),
                                      options.max_width);
    item.negative_spans = std::move(negatives.spans);
    item.negative_pairs = std::move(negatives.pairs);
    batch.items.push_back(std::move(item));

    std::vector<std::uint8_t> row(static_cast<size_t>(batch.padded_length), 0);
    std::fill_n(row.begin(), ex.size(), std::uint8_t{1});
    batch.mask.push_back(std::move(row));
  }
  return batch;
}

}  // namespace stsn
