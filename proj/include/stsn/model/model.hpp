#pragma once

#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "stsn/core/autograd.hpp"
#include "stsn/core/parameters.hpp"
#include "stsn/data/corpus.hpp"
#include "stsn/data/spans.hpp"
#include "stsn/data/vocab.hpp"
#include "stsn/decoders/decoders.hpp"
#include "stsn/encoder/encoder.hpp"
#include "stsn/model/config.hpp"
#include "stsn/stack/stack.hpp"

namespace stsn {

struct LossTerms {
  ad::Var tagging;   // L_L
  ad::Var span;      // L_E
  ad::Var relation;  // L_R
  ad::Var joint;     // L_L + L_E + L_R
  int token_count = 0;
  int span_count = 0;
  int pair_count = 0;
};

/// Intermediate values of one sentence of a forward pass.
struct SentenceTrace {
  ad::Var token_repr;     // padded n_pad x d
  StackResult streams;    // padded streams
  ad::Var tag_logits;     // n x l
  std::vector<int> gold_labels;
  std::vector<int> predicted_labels;
  std::vector<int> label_rows;  // label indices looked up in the label table
  ad::Var span_logits;
  ad::Var relation_logits;
};

struct ForwardOptions {
  LabelMode label_mode = LabelMode::kTraining;
  std::mt19937_64* dropout_rng = nullptr;
  std::vector<SentenceTrace>* traces = nullptr;
  std::vector<std::string>* unit_trace = nullptr;
  /// Fills an n x l offset added to the tag logits of sentence `i`.
  std::function<void(int i, Matrix& offset)> tag_logit_offset;
};

struct PredictionTrace {
  std::vector<int> predicted_labels;
  std::vector<int> label_rows;
  TagSequence tags;
  std::vector<SpanCandidate> spans;
  Matrix span_probabilities;
  Matrix relation_scores;
};

class StsnModel {
 public:
  /// Fresh parameters drawn from the config seed. `corpus` supplies the test
  /// backend's piece vocabulary unless `backend_state` is given.
  StsnModel(const Config& config, Vocabularies vocabularies, const Corpus& corpus,
            const std::string& backend_state = {});

  StsnModel(StsnModel&&) = default;
  StsnModel& operator=(StsnModel&&) = default;

  const Config& config() const { return config_; }
  const ModelOptions& options() const { return options_; }
  const Vocabularies& vocabularies() const { return vocabularies_; }
  ParameterStore& parameters() { return store_; }
  const ParameterStore& parameters() const { return store_; }
  const EncoderBackend& backend() const { return *backend_; }
  const StackParams& stack() const { return stack_; }
  const DecoderParams& decoders() const { return decoders_; }
  int dim() const { return backend_->dim(); }

  LossTerms forward_batch(ad::Tape& tape, const TrainingBatch& batch,
                          const ForwardOptions& options = {}) const;

  PredictionRecord predict(const std::vector<std::string>& tokens, int id = 0,
                           PredictionTrace* trace = nullptr) const;
  /// Sentences are processed in parallel; output order follows the input.
  std::vector<PredictionRecord> predict_corpus(const Corpus& corpus) const;

  /// Throws VocabularyMismatch when gold annotations use types this model
  /// does not know.
  void check_vocabulary(const Corpus& corpus) const;

  std::vector<int> gold_label_indices(const SentenceExample& example) const;

 private:
  Config config_;
  ModelOptions options_;
  Vocabularies vocabularies_;
  ParameterStore store_;
  std::unique_ptr<EncoderBackend> backend_;
  StackParams stack_;
  DecoderParams decoders_;
};

}  // namespace stsn
