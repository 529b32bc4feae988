#pragma once

#include <random>
#include <span>
#include <vector>

#include "stsn/core/autograd.hpp"
#include "stsn/core/parameters.hpp"
#include "stsn/data/spans.hpp"
#include "stsn/model/config.hpp"

namespace stsn {

/// Width of a span representation: head row, tail row, width embedding.
int span_representation_dim(int dim, const DecoderOptions& options);
/// Width of a relation representation: two spans plus the context vector.
int relation_representation_dim(int dim, const DecoderOptions& options);

struct DecoderParams {
  Parameter* tag_weight = nullptr;   // d x l
  Parameter* tag_bias = nullptr;     // 1 x l
  Parameter* label_table = nullptr;  // l x label_dim; absent without label embeddings
  Parameter* width_table = nullptr;  // max_width x width_dim
  Parameter* span_weight = nullptr;  // dim(E_s) x entity types
  Parameter* span_bias = nullptr;
  Parameter* relation_weight = nullptr;  // dim(E_r) x relation types
  Parameter* relation_bias = nullptr;
  Parameter* no_context = nullptr;       // 1 x (d + label_dim)
  DecoderOptions options;

  static DecoderParams create(ParameterStore& store, int dim, int labels, int entity_types,
                              int relation_types, const DecoderOptions& options,
                              std::mt19937_64& rng);
  static std::size_t scalar_count(int dim, int labels, int entity_types, int relation_types,
                                  const DecoderOptions& options);
};

/// H_L W^L + b^L.
ad::Var tag_logits(ad::Var label_stream, const DecoderParams& params);

struct TagDecoding {
  Matrix probabilities;      // rows sum to 1
  std::vector<int> labels;   // argmax, lowest index on ties
};
TagDecoding decode_sequence_labels(const Matrix& logits);

/// Row-wise argmax with ties going to the lowest index.
std::vector<int> argmax_rows(const Matrix& m);

enum class LabelMode { kTraining, kInference };

/// Gold labels in training, predicted labels in inference.
const std::vector<int>& choose_label_indices(LabelMode mode, const std::vector<int>& gold,
                                             const std::vector<int>& predicted);

/// Rows of the label table for `labels`. Throws VocabularyError on an index
/// outside the table.
ad::Var select_label_embeddings(ad::Tape& tape, const DecoderParams& params,
                                const std::vector<int>& labels);

/// [stream ; label rows], or the stream alone without label embeddings.
ad::Var augment_stream(ad::Var stream, const ad::Var* label_rows);

/// One row per span: [H'[start] ; H'[end - 1] ; W[width - 1]].
ad::Var span_representations(ad::Var augmented, std::span<const SpanCandidate> spans,
                             ad::Var width_table);

/// Gap tokens of an ordered pair: [min(end1, end2), max(start1, start2)).
std::pair<int, int> context_gap(const SpanCandidate& a, const SpanCandidate& b);

/// Max over gap rows per pair; the no-context row when the gap is empty.
ad::Var relation_contexts(ad::Var augmented,
                          std::span<const std::pair<SpanCandidate, SpanCandidate>> pairs,
                          ad::Var no_context);

/// One row per pair: [E_s1 ; E_s2 ; C_r].
ad::Var relation_representations(ad::Var augmented,
                                 std::span<const std::pair<SpanCandidate, SpanCandidate>> pairs,
                                 ad::Var width_table, ad::Var no_context);

ad::Var span_logits(ad::Var representations, const DecoderParams& params);
ad::Var relation_logits(ad::Var representations, const DecoderParams& params);

/// Types whose sigmoid score is at least `threshold`, per row.
std::vector<std::vector<int>> activated_relations(const Matrix& scores, double threshold);

/// Sum of per-row cross-entropy scaled by 1 / count.
ad::Var mean_cross_entropy(ad::Var logits, std::span<const int> targets, int count);
/// Sum of per-entry binary cross-entropy scaled by the configured average.
ad::Var mean_binary_cross_entropy(ad::Var logits, const Matrix& targets, int pair_count,
                                  RelationLossAverage average);

}  // namespace stsn
