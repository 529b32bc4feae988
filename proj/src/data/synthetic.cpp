#include "stsn/data/synthetic.hpp"

#include <random>
#include <string>
#include <vector>

namespace stsn {

namespace {

using Words = std::vector<std::string>;

const std::vector<Words> kPeople = {{"Jack"}, {"Mary", "Smith"}, {"John"}, {"Anna", "Lee"},
                                    {"Peter", "Brown"}, {"Lucy"}};
const std::vector<Words> kOrganizations = {
    {"Harvard", "University"}, {"Acme", "Corp"}, {"Boston", "Globe"}, {"Red", "Cross"}};
const std::vector<Words> kLocations = {{"Boston"}, {"New", "York"}, {"Paris"}, {"Oslo"}};
const std::vector<Words> kDrugs = {{"Codeine"}, {"Aspirin"}, {"Warfarin"}, {"Ibuprofen"}};
const std::vector<Words> kEffects = {{"intoxication"}, {"toxicity"}, {"overdose"}};
const std::vector<Words> kReactions = {{"rash"}, {"nausea"}, {"severe", "bleeding"}};

struct Slot {
  std::string type;
  const std::vector<Words>* pool;
};

// A literal word, a typed slot, or the overlapping drug-effect construct.
struct Piece {
  enum class Kind { kWord, kSlot, kDrugEffect } kind;
  std::string word;
  Slot slot;
};

struct RelationSpec {
  int head;  // index into the template's mentions
  int tail;
  std::string type;
};

struct Template {
  std::vector<Piece> pieces;
  std::vector<RelationSpec> relations;
};

Piece word(std::string w) { return {Piece::Kind::kWord, std::move(w), {}}; }
Piece slot(std::string type, const std::vector<Words>& pool) {
  return {Piece::Kind::kSlot, {}, {std::move(type), &pool}};
}
Piece drug_effect() { return {Piece::Kind::kDrugEffect, {}, {}}; }

// Mentions are numbered in the order their slots appear; the drug-effect
// construct contributes the effect (index k) and then the drug (index k+1).
const std::vector<Template>& related_templates() {
  static const std::vector<Template> t = {
      {{slot("PER", kPeople), word("taught"), word("at"), slot("ORG", kOrganizations), word(".")},
       {{0, 1, "Work-For"}}},
      {{slot("PER", kPeople), word("works"), word("for"), slot("ORG", kOrganizations),
        word("in"), slot("LOC", kLocations), word(".")},
       {{0, 1, "Work-For"}, {0, 2, "Live-In"}}},
      {{slot("PER", kPeople), word("lives"), word("in"), slot("LOC", kLocations), word(".")},
       {{0, 1, "Live-In"}}},
      {{slot("ORG", kOrganizations), word("is"), word("based"), word("in"),
        slot("LOC", kLocations), word(".")},
       {{0, 1, "OrgBased-In"}}},
      {{word("The"), word("patient"), word("developed"), slot("AE", kReactions), word("after"),
        word("taking"), slot("DRUG", kDrugs), word(".")},
       {{0, 1, "Adverse-Effect"}}},
  };
  return t;
}

const Template& overlap_template() {
  static const Template t = {
      {drug_effect(), word("was"), word("reported"), word("in"), word("a"), word("patient"),
       word(".")},
      {{0, 1, "Adverse-Effect"}}};
  return t;
}

const Template& unrelated_template() {
  static const Template t = {
      {slot("PER", kPeople), word("met"), slot("PER", kPeople), word("yesterday"), word(".")}, {}};
  return t;
}

SentenceExample instantiate(const Template& t, std::mt19937_64& rng) {
  auto pick = [&](const std::vector<Words>& pool) -> const Words& {
    std::uniform_int_distribution<size_t> d(0, pool.size() - 1);
    return pool[d(rng)];
  };
  SentenceExample ex;
  std::vector<EntityMention> mentions;
  auto append = [&](const Words& words) {
    const int start = ex.size();
    ex.tokens.insert(ex.tokens.end(), words.begin(), words.end());
    return start;
  };
  for (const auto& piece : t.pieces) {
    switch (piece.kind) {
      case Piece::Kind::kWord:
        ex.tokens.push_back(piece.word);
        break;
      case Piece::Kind::kSlot: {
        const Words* words = &pick(*piece.slot.pool);
        // Two mentions of one slot pool in a sentence must differ.
        for (const auto& m : mentions) {
          if (m.type == piece.slot.type) {
            while (Words(ex.tokens.begin() + m.start, ex.tokens.begin() + m.end) == *words) {
              words = &pick(*piece.slot.pool);
            }
          }
        }
        const int start = append(*words);
        mentions.push_back({piece.slot.type, start, ex.size()});
        break;
      }
      case Piece::Kind::kDrugEffect: {
        const int start = append(pick(kDrugs));
        const int drug_end = ex.size();
        append(pick(kEffects));
        mentions.push_back({"AE", start, ex.size()});
        mentions.push_back({"DRUG", start, drug_end});
        break;
      }
    }
  }
  ex.entities.insert(mentions.begin(), mentions.end());
  for (const auto& r : t.relations) {
    ex.relations.insert({mentions[static_cast<size_t>(r.head)], mentions[static_cast<size_t>(r.tail)],
                         r.type});
  }
  return ex;
}

}  // namespace

Corpus make_synthetic_corpus(const SyntheticOptions& options) {
  std::mt19937_64 rng(options.seed);
  Corpus corpus;
  const auto& related = related_templates();
  for (int i = 0; i < options.sentences; ++i) {
    if (i < options.overlapping) {
      corpus.push_back(instantiate(overlap_template(), rng));
    } else if (i < options.overlapping + options.unrelated) {
      corpus.push_back(instantiate(unrelated_template(), rng));
    } else {
      const auto k = static_cast<size_t>(i - options.overlapping - options.unrelated);
      corpus.push_back(instantiate(related[k % related.size()], rng));
    }
  }
  return corpus;
}

}  // namespace stsn
