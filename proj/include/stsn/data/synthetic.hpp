#pragma once

#include <cstdint>

#include "stsn/data/corpus.hpp"

namespace stsn {

/// Templated sentences for hermetic tests: person/organization/location
/// relations in the style of CoNLL04 plus drug/adverse-effect sentences in
/// the style of ADE, where "<drug> <effect-noun>" is an adverse effect that
/// contains the drug mention (a two-fold overlap).
struct SyntheticOptions {
  int sentences = 20;
  /// How many sentences use the overlapping drug/effect template.
  int overlapping = 3;
  /// How many sentences carry no relation at all.
  int unrelated = 2;
  std::uint64_t seed = 7;
};

Corpus make_synthetic_corpus(const SyntheticOptions& options = {});

}  // namespace stsn
