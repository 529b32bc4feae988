#pragma once

#include <filesystem>
#include <string_view>

#include "stsn/data/corpus.hpp"
#include "stsn/tagging/codec.hpp"

namespace stsn {

inline constexpr std::string_view kNoneEntity = "NoneEntity";

struct Vocabularies {
  LabelVocabulary labels;     // composite BIO labels, "O" at index 0
  Vocabulary entity_types;    // NoneEntity at index 0, then observed types
  Vocabulary relation_types;  // observed types only

  friend bool operator==(const Vocabularies&, const Vocabularies&) = default;

  /// labels.txt, entity_types.txt, relation_types.txt under `dir`.
  void save(const std::filesystem::path& dir) const;
  static Vocabularies load(const std::filesystem::path& dir);
};

/// Collects composite labels by running the tagging codec over every
/// sentence. Observed items are sorted so indices do not depend on corpus
/// order.
Vocabularies build_vocabularies(const Corpus& corpus);

}  // namespace stsn
