#pragma once

#include <compare>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "stsn/tagging/codec.hpp"

namespace stsn {

/// A typed, ordered pair of mentions.
struct RelationTuple {
  EntityMention head;
  EntityMention tail;
  std::string type;

  friend bool operator==(const RelationTuple&, const RelationTuple&) = default;
  friend auto operator<=>(const RelationTuple&, const RelationTuple&) = default;
};

using RelationSet = std::set<RelationTuple>;

struct SentenceExample {
  std::vector<std::string> tokens;
  EntitySet entities;
  RelationSet relations;

  int size() const { return static_cast<int>(tokens.size()); }
};

using Corpus = std::vector<SentenceExample>;

struct LoadOptions {
  /// Longer sentences are rejected, not truncated.
  int max_sentence_length = 128;
  /// When positive, mentions wider than this are rejected.
  int max_entity_width = 0;
};

/// Parses a JSON array of {"tokens", "entities", "relations"} records.
/// Relation "head"/"tail" are indices into the record's entity list.
Corpus parse_corpus(std::string_view json_text, const LoadOptions& options = {});
Corpus load_corpus(const std::filesystem::path& path, const LoadOptions& options = {});

std::string corpus_to_json(const Corpus& corpus);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// Model output for one sentence; `id` is the sentence's position in the
/// input corpus.
struct PredictionRecord {
  int id = 0;
  EntitySet entities;
  RelationSet relations;

  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

std::string predictions_to_json(const std::vector<PredictionRecord>& records);
std::vector<PredictionRecord> parse_predictions(std::string_view json_text);
std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path);

/// Reads a whole file; throws IoError.
std::string read_text_file(const std::filesystem::path& path);
/// Writes via a temporary sibling and rename; throws IoError.
void write_text_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace stsn
