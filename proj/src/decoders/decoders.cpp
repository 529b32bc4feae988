#include "stsn/decoders/decoders.hpp"

#include <algorithm>

#include "stsn/errors.hpp"

namespace stsn {

int span_representation_dim(int dim, const DecoderOptions& options) {
  const int row = dim + (options.no_label_embedding ? 0 : options.label_dim);
  return 2 * row + options.width_dim;
}

int relation_representation_dim(int dim, const DecoderOptions& options) {
  const int row = dim + (options.no_label_embedding ? 0 : options.label_dim);
  return 2 * span_representation_dim(dim, options) + row;
}

DecoderParams DecoderParams::create(ParameterStore& store, int dim, int labels, int entity_types,
                                    int relation_types, const DecoderOptions& options,
                                    std::mt19937_64& rng) {
  if (labels < 1 || entity_types < 1 || relation_types < 0) {
    throw ConfigError("decoders need at least one label and one entity type");
  }
  DecoderParams p;
  p.options = options;
  const int row = dim + (options.no_label_embedding ? 0 : options.label_dim);
  p.tag_weight = &store.add("decoder.tag.weight", dim, labels, Init::kXavierUniform, rng);
  p.tag_bias = &store.add("decoder.tag.bias", 1, labels, Init::kZeros, rng, false);
  if (!options.no_label_embedding) {
    p.label_table = &store.add("decoder.label_table", labels, options.label_dim, Init::kNormal002, rng);
  }
  p.width_table =
      &store.add("decoder.width_table", options.max_width, options.width_dim, Init::kNormal002, rng);
  p.span_weight = &store.add("decoder.span.weight", span_representation_dim(dim, options),
                             entity_types, Init::kXavierUniform, rng);
  p.span_bias = &store.add("decoder.span.bias", 1, entity_types, Init::kZeros, rng, false);
  p.relation_weight = &store.add("decoder.relation.weight", relation_representation_dim(dim, options),
                                 relation_types, Init::kXavierUniform, rng);
  p.relation_bias = &store.add("decoder.relation.bias", 1, relation_types, Init::kZeros, rng, false);
  p.no_context = &store.add("decoder.no_context", 1, row, Init::kNormal002, rng, false);
  return p;
}

std::size_t DecoderParams::scalar_count(int dim, int labels, int entity_types, int relation_types,
                                        const DecoderOptions& options) {
  const auto d = static_cast<std::size_t>(dim);
  const auto l = static_cast<std::size_t>(labels);
  const auto e = static_cast<std::size_t>(entity_types);
  const auto r = static_cast<std::size_t>(relation_types);
  const auto ld = options.no_label_embedding ? 0 : static_cast<std::size_t>(options.label_dim);
  const auto es = static_cast<std::size_t>(span_representation_dim(dim, options));
  const auto er = static_cast<std::size_t>(relation_representation_dim(dim, options));
  return d * l + l + l * ld +
         static_cast<std::size_t>(options.max_width) * static_cast<std::size_t>(options.width_dim) +
         es * e + e + er * r + r + (d + ld);
}

ad::Var tag_logits(ad::Var label_stream, const DecoderParams& params) {
  auto& tape = label_stream.tape();
  return ad::add_row(ad::matmul(label_stream, tape.parameter(*params.tag_weight)),
                     tape.parameter(*params.tag_bias));
}

std::vector<int> argmax_rows(const Matrix& m) {
  std::vector<int> out(static_cast<size_t>(m.rows()), 0);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < m.cols(); ++j) {
      if (m(i, j) > m(i, best)) best = j;
    }
    out[static_cast<size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

TagDecoding decode_sequence_labels(const Matrix& logits) {
  TagDecoding out;
  out.probabilities = ad::softmax_values(logits);
  out.labels = argmax_rows(logits);
  return out;
}

const std::vector<int>& choose_label_indices(LabelMode mode, const std::vector<int>& gold,
                                             const std::vector<int>& predicted) {
  return mode == LabelMode::kTraining ? gold : predicted;
}

ad::Var select_label_embeddings(ad::Tape& tape, const DecoderParams& params,
                                const std::vector<int>& labels) {
  if (params.label_table == nullptr) {
    throw ConfigError("label embeddings are disabled in this model");
  }
  const auto rows = params.label_table->value.rows();
  for (int l : labels) {
    if (l < 0 || l >= rows) {
      throw VocabularyError("label index " + std::to_string(l) + " is outside the " +
                            std::to_string(rows) + "-row label table");
    }
  }
  return ad::gather_rows(tape.parameter(*params.label_table), labels);
}

ad::Var augment_stream(ad::Var stream, const ad::Var* label_rows) {
  if (label_rows == nullptr) return stream;
  const ad::Var parts[] = {stream, *label_rows};
  return ad::concat_cols(parts);
}

ad::Var span_representations(ad::Var augmented, std::span<const SpanCandidate> spans,
                             ad::Var width_table) {
  const auto n = static_cast<int>(augmented.rows());
  const auto max_width = static_cast<int>(width_table.rows());
  std::vector<int> heads, tails, widths;
  for (const auto& s : spans) {
    if (s.start < 0 || s.end > n || s.width() < 1) {
      throw ValidationError("span [" + std::to_string(s.start) + ", " + std::to_string(s.end) +
                            ") is outside a " + std::to_string(n) + "-token sentence");
    }
    if (s.width() > max_width) {
      throw ValidationError("span width " + std::to_string(s.width()) +
                            " exceeds the maximum width " + std::to_string(max_width));
    }
    heads.push_back(s.start);
    tails.push_back(s.end - 1);
    widths.push_back(s.width() - 1);
  }
  const ad::Var parts[] = {ad::gather_rows(augmented, std::move(heads)),
                           ad::gather_rows(augmented, std::move(tails)),
                           ad::gather_rows(width_table, std::move(widths))};
  return ad::concat_cols(parts);
}

std::pair<int, int> context_gap(const SpanCandidate& a, const SpanCandidate& b) {
  return {std::min(a.end, b.end), std::max(a.start, b.start)};
}

ad::Var relation_contexts(ad::Var augmented,
                          std::span<const std::pair<SpanCandidate, SpanCandidate>> pairs,
                          ad::Var no_context) {
  std::vector<int> rows, groups;
  std::vector<int> source(pairs.size());
  int pooled = 0;
  for (size_t i = 0; i < pairs.size(); ++i) {
    const auto [lo, hi] = context_gap(pairs[i].first, pairs[i].second);
    if (lo >= hi) {
      source[i] = -1;
      continue;
    }
    for (int t = lo; t < hi; ++t) {
      rows.push_back(t);
      groups.push_back(pooled);
    }
    source[i] = pooled++;
  }
  if (pooled == 0) {
    return ad::gather_rows(no_context, std::vector<int>(pairs.size(), 0));
  }
  const auto gap_rows = ad::gather_rows(augmented, std::move(rows));
  const auto contexts = ad::max_pool_groups(gap_rows, std::move(groups), pooled);
  const ad::Var parts[] = {contexts, no_context};
  for (auto& s : source) {
    if (s < 0) s = pooled;
  }
  return ad::gather_rows(ad::concat_rows(parts), std::move(source));
}

ad::Var relation_representations(ad::Var augmented,
                                 std::span<const std::pair<SpanCandidate, SpanCandidate>> pairs,
                                 ad::Var width_table, ad::Var no_context) {
  std::vector<SpanCandidate> first, second;
  for (const auto& [a, b] : pairs) {
    first.push_back(a);
    second.push_back(b);
  }
  const ad::Var parts[] = {span_representations(augmented, first, width_table),
                           span_representations(augmented, second, width_table),
                           relation_contexts(augmented, pairs, no_context)};
  return ad::concat_cols(parts);
}

ad::Var span_logits(ad::Var representations, const DecoderParams& params) {
  auto& tape = representations.tape();
  return ad::add_row(ad::matmul(representations, tape.parameter(*params.span_weight)),
                     tape.parameter(*params.span_bias));
}

ad::Var relation_logits(ad::Var representations, const DecoderParams& params) {
  auto& tape = representations.tape();
  return ad::add_row(ad::matmul(representations, tape.parameter(*params.relation_weight)),
                     tape.parameter(*params.relation_bias));
}

std::vector<std::vector<int>> activated_relations(const Matrix& scores, double threshold) {
  std::vector<std::vector<int>> out(static_cast<size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    for (Eigen::Index k = 0; k < scores.cols(); ++k) {
      if (scores(i, k) >= threshold) out[static_cast<size_t>(i)].push_back(static_cast<int>(k));
    }
  }
  return out;
}

ad::Var mean_cross_entropy(ad::Var logits, std::span<const int> targets, int count) {
  if (count < 1) throw ShapeError("mean_cross_entropy: instance count must be positive");
  return ad::softmax_cross_entropy(logits, targets, 1.0 / count);
}

ad::Var mean_binary_cross_entropy(ad::Var logits, const Matrix& targets, int pair_count,
                                  RelationLossAverage average) {
  if (pair_count < 1) throw ShapeError("mean_binary_cross_entropy: pair count must be positive");
  double denom = pair_count;
  if (average == RelationLossAverage::kPairType) denom *= std::max<Eigen::Index>(1, logits.cols());
  return ad::sigmoid_cross_entropy(logits, targets, 1.0 / denom);
}

}  // namespace stsn
