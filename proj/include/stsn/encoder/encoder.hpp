#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "stsn/core/autograd.hpp"
#include "stsn/core/parameters.hpp"
#include "stsn/data/corpus.hpp"
#include "stsn/model/config.hpp"
#include "stsn/stack/attention.hpp"

namespace stsn {

/// Backend output for one sentence: one row per sub-token or marker.
struct SubtokenEncoding {
  ad::Var vectors;
  /// Token index of each row; -1 marks a special begin/end marker.
  std::vector<int> token_of_row;
};

/// Produces contextual sub-token vectors for a token list. Implementations
/// must be safe to call concurrently as long as each call uses its own tape.
class EncoderBackend {
 public:
  virtual ~EncoderBackend() = default;
  virtual int dim() const = 0;
  virtual std::string kind() const = 0;
  virtual SubtokenEncoding encode(ad::Tape& tape, const std::vector<std::string>& tokens) const = 0;
  /// Non-parameter state needed to rebuild the backend (written to checkpoints).
  virtual std::string state() const = 0;
};

/// Max-pools each token's sub-token rows and drops marker rows; the result
/// has one row per token. Throws AlignmentError when a token has no rows.
ad::Var embed_tokens(ad::Tape& tape, const std::vector<std::string>& tokens,
                     const EncoderBackend& backend);

/// The same pooling on plain matrices.
Matrix pool_subtokens(const Matrix& vectors, const std::vector<int>& token_of_row, int tokens);

/// Splits a token into pieces of at most `chars` bytes; pieces after the first
/// carry a "##" prefix.
std::vector<std::string> split_subtokens(const std::string& token, int chars);

inline constexpr const char* kUnknownPiece = "[UNK]";
inline constexpr const char* kBeginMarker = "[CLS]";
inline constexpr const char* kEndMarker = "[SEP]";

/// [UNK], [CLS], [SEP] followed by every piece of the corpus in sorted order.
Vocabulary build_subtoken_vocabulary(const Corpus& corpus, int chars);

/// Small trainable backend: piece lookup table plus token-position embeddings
/// followed by one self-attention unit.
class TestBackend final : public EncoderBackend {
 public:
  TestBackend(const EncoderOptions& options, Vocabulary pieces, ParameterStore& store,
              std::mt19937_64& rng);

  int dim() const override { return dim_; }
  std::string kind() const override { return "test"; }
  SubtokenEncoding encode(ad::Tape& tape, const std::vector<std::string>& tokens) const override;
  std::string state() const override;

  const Vocabulary& pieces() const { return pieces_; }
  static std::size_t scalar_count(const EncoderOptions& options, int vocabulary_size);

 private:
  int dim_;
  int heads_;
  int chars_;
  int max_positions_;
  double layer_norm_eps_ = 1e-5;
  Vocabulary pieces_;
  Parameter* table_;
  Parameter* positions_;
  AttentionUnitParams block_;
};

/// Frozen vectors read from a feature file:
/// {"dim": d, "records": [{"tokens": [...], "alignment": [...], "vectors": [[...], ...]}]}.
/// Sentences are looked up by their exact token list.
class PrecomputedBackend final : public EncoderBackend {
 public:
  explicit PrecomputedBackend(const std::filesystem::path& path);

  int dim() const override { return dim_; }
  std::string kind() const override { return "precomputed"; }
  SubtokenEncoding encode(ad::Tape& tape, const std::vector<std::string>& tokens) const override;
  std::string state() const override { return path_.string(); }

 private:
  struct Entry {
    Matrix vectors;
    std::vector<int> alignment;
  };
  std::filesystem::path path_;
  int dim_ = 0;
  std::map<std::vector<std::string>, Entry> entries_;
};

/// Builds the configured backend. `state` is a previously saved
/// EncoderBackend::state(); when empty a test backend derives its piece
/// vocabulary from `corpus`.
std::unique_ptr<EncoderBackend> make_backend(const EncoderOptions& options, ParameterStore& store,
                                             std::mt19937_64& rng, const Corpus& corpus,
                                             const std::string& state = {});

}  // namespace stsn
