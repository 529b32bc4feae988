#include "stsn/encoder/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "stsn/errors.hpp"

namespace stsn {

namespace {

void check_alignment(const std::vector<int>& token_of_row, Eigen::Index rows, int tokens) {
  if (static_cast<Eigen::Index>(token_of_row.size()) != rows) {
    throw AlignmentError("backend returned " + std::to_string(rows) + " rows but " +
                         std::to_string(token_of_row.size()) + " alignment entries");
  }
  std::vector<int> counts(static_cast<size_t>(tokens), 0);
  for (int t : token_of_row) {
    if (t < -1 || t >= tokens) {
      throw AlignmentError("alignment entry " + std::to_string(t) + " is outside the " +
                           std::to_string(tokens) + "-token sentence");
    }
    if (t >= 0) ++counts[static_cast<size_t>(t)];
  }
  for (int t = 0; t < tokens; ++t) {
    if (counts[static_cast<size_t>(t)] == 0) {
      throw AlignmentError("token " + std::to_string(t) + " has no sub-tokens");
    }
  }
}

}  // namespace

ad::Var embed_tokens(ad::Tape& tape, const std::vector<std::string>& tokens,
                     const EncoderBackend& backend) {
  if (tokens.empty()) throw ValidationError("cannot embed an empty token list");
  const auto enc = backend.encode(tape, tokens);
  const int n = static_cast<int>(tokens.size());
  check_alignment(enc.token_of_row, enc.vectors.rows(), n);
  return ad::max_pool_groups(enc.vectors, enc.token_of_row, n);
}

Matrix pool_subtokens(const Matrix& vectors, const std::vector<int>& token_of_row, int tokens) {
  check_alignment(token_of_row, vectors.rows(), tokens);
  Matrix out;
  IndexMatrix argmax;
  kernels::serial::max_pool_groups(vectors, token_of_row, tokens, out, argmax);
  return out;
}

std::vector<std::string> split_subtokens(const std::string& token, int chars) {
  if (chars < 1) throw ConfigError("sub-token width must be positive");
  std::vector<std::string> pieces;
  if (token.empty()) {
    pieces.emplace_back(kUnknownPiece);
    return pieces;
  }
  for (size_t i = 0; i < token.size(); i += static_cast<size_t>(chars)) {
    auto piece = token.substr(i, static_cast<size_t>(chars));
    pieces.push_back(i == 0 ? piece : "##" + piece);
  }
  return pieces;
}

Vocabulary build_subtoken_vocabulary(const Corpus& corpus, int chars) {
  std::set<std::string> seen;
  for (const auto& ex : corpus) {
    for (const auto& token : ex.tokens) {
      for (auto& piece : split_subtokens(token, chars)) {
        if (piece.find('\n') == std::string::npos) seen.insert(std::move(piece));
      }
    }
  }
  Vocabulary v;
  v.add(kUnknownPiece);
  v.add(kBeginMarker);
  v.add(kEndMarker);
  for (const auto& piece : seen) v.add(piece);
  return v;
}

// ---------------------------------------------------------------------------

TestBackend::TestBackend(const EncoderOptions& options, Vocabulary pieces, ParameterStore& store,
                         std::mt19937_64& rng)
    : dim_(options.dim),
      heads_(options.heads),
      chars_(options.subtoken_chars),
      max_positions_(options.max_positions),
      pieces_(std::move(pieces)) {
  if (dim_ < 1 || dim_ % heads_ != 0) {
    throw ConfigError("encoder.dim " + std::to_string(dim_) + " must be divisible by encoder.heads " +
                      std::to_string(heads_));
  }
  table_ = &store.add("encoder.pieces", pieces_.size(), dim_, Init::kNormalScaled, rng);
  positions_ = &store.add("encoder.positions", max_positions_, dim_, Init::kNormalScaled, rng);
  block_ = AttentionUnitParams::create(store, "encoder.block", dim_, rng);
  if (!options.trainable) {
    for (auto& p : store) {
      if (p->name.rfind("encoder.", 0) == 0) p->trainable = false;
    }
  }
}

std::size_t TestBackend::scalar_count(const EncoderOptions& options, int vocabulary_size) {
  const auto d = static_cast<std::size_t>(options.dim);
  return static_cast<std::size_t>(vocabulary_size) * d +
         static_cast<std::size_t>(options.max_positions) * d +
         AttentionUnitParams::scalar_count(options.dim);
}

SubtokenEncoding TestBackend::encode(ad::Tape& tape, const std::vector<std::string>& tokens) const {
  const int n = static_cast<int>(tokens.size());
  if (n + 2 > max_positions_) {
    throw ValidationError("sentence of " + std::to_string(n) + " tokens exceeds encoder.max_positions " +
                          std::to_string(max_positions_) + " (two positions go to markers)");
  }
  std::vector<int> ids{pieces_.index(kBeginMarker)};
  std::vector<int> positions{0};
  SubtokenEncoding enc;
  enc.token_of_row.push_back(-1);
  const int unknown = pieces_.index(kUnknownPiece);
  for (int t = 0; t < n; ++t) {
    for (const auto& piece : split_subtokens(tokens[static_cast<size_t>(t)], chars_)) {
      const int id = pieces_.find(piece);
      ids.push_back(id < 0 ? unknown : id);
      positions.push_back(t + 1);
      enc.token_of_row.push_back(t);
    }
  }
  ids.push_back(pieces_.index(kEndMarker));
  positions.push_back(n + 1);
  enc.token_of_row.push_back(-1);

  const auto x = ad::add(ad::gather_rows(tape.parameter(*table_), std::move(ids)),
                         ad::gather_rows(tape.parameter(*positions_), std::move(positions)));
  const AttentionSettings settings{heads_, 0.0, layer_norm_eps_, nullptr};
  enc.vectors = attention_unit(x, x, block_, {}, settings);
  return enc;
}

std::string TestBackend::state() const {
  std::string out;
  for (const auto& piece : pieces_.items()) out += piece + '\n';
  return out;
}

// ---------------------------------------------------------------------------

PrecomputedBackend::PrecomputedBackend(const std::filesystem::path& path) : path_(path) {
  using nlohmann::json;
  json root;
  try {
    root = json::parse(read_text_file(path));
    dim_ = root.at("dim").get<int>();
    if (dim_ < 1) throw ParseError(path.string() + ": dim must be positive");
    size_t index = 0;
    for (const auto& rec : root.at("records")) {
      const std::string where = path.string() + ": record " + std::to_string(index++);
      Entry entry;
      auto tokens = rec.at("tokens").get<std::vector<std::string>>();
      entry.alignment = rec.at("alignment").get<std::vector<int>>();
      const auto& rows = rec.at("vectors");
      entry.vectors.resize(static_cast<Eigen::Index>(rows.size()), dim_);
      for (size_t r = 0; r < rows.size(); ++r) {
        const auto values = rows[r].get<std::vector<double>>();
        if (static_cast<int>(values.size()) != dim_) {
          throw ParseError(where + ": vector " + std::to_string(r) + " has " +
                           std::to_string(values.size()) + " values, expected " +
                           std::to_string(dim_));
        }
        for (int c = 0; c < dim_; ++c) {
          if (!std::isfinite(values[static_cast<size_t>(c)])) {
            throw ParseError(where + ": non-finite feature value");
          }
          entry.vectors(static_cast<Eigen::Index>(r), c) = values[static_cast<size_t>(c)];
        }
      }
      check_alignment(entry.alignment, entry.vectors.rows(), static_cast<int>(tokens.size()));
      entries_.insert_or_assign(std::move(tokens), std::move(entry));
    }
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

SubtokenEncoding PrecomputedBackend::encode(ad::Tape& tape,
                                            const std::vector<std::string>& tokens) const {
  const auto it = entries_.find(tokens);
  if (it == entries_.end()) {
    throw AlignmentError("no precomputed features for a " + std::to_string(tokens.size()) +
                         "-token sentence starting with '" + (tokens.empty() ? "" : tokens[0]) +
                         "'");
  }
  return {tape.constant(it->second.vectors), it->second.alignment};
}

std::unique_ptr<EncoderBackend> make_backend(const EncoderOptions& options, ParameterStore& store,
                                             std::mt19937_64& rng, const Corpus& corpus,
                                             const std::string& state) {
  if (options.kind == "precomputed") {
    const std::filesystem::path path = state.empty() ? options.model_id : state;
    if (path.empty()) throw ConfigError("encoder.kind=precomputed needs encoder.model_id");
    return std::make_unique<PrecomputedBackend>(path);
  }
  if (options.kind != "test") throw ConfigError("unknown encoder.kind '" + options.kind + "'");
  Vocabulary pieces;
  if (state.empty()) {
    pieces = build_subtoken_vocabulary(corpus, options.subtoken_chars);
  } else {
    std::istringstream in(state);
    std::string line;
    while (std::getline(in, line)) pieces.add(line);
  }
  return std::make_unique<TestBackend>(options, std::move(pieces), store, rng);
}

}  // namespace stsn
