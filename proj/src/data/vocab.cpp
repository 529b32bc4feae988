#include "stsn/data/vocab.hpp"

#include <set>

#include "stsn/errors.hpp"

namespace stsn {

Vocabularies build_vocabularies(const Corpus& corpus) {
  if (corpus.empty()) throw ValidationError("cannot build vocabularies from an empty corpus");
  std::set<std::string> labels;
  std::set<std::string> entity_types;
  std::set<std::string> relation_types;
  for (const auto& ex : corpus) {
    for (auto& tag : encode_bio(ex.size(), ex.entities)) {
      if (tag != kOutside) labels.insert(std::move(tag));
    }
    for (const auto& m : ex.entities) {
      check_type_name(m.type);
      if (m.type == kNoneEntity) {
        throw VocabularyError("entity type name '" + m.type + "' is reserved");
      }
      entity_types.insert(m.type);
    }
    for (const auto& r : ex.relations) relation_types.insert(r.type);
  }

  Vocabularies v;
  v.labels.add(std::string(kOutside));
  for (const auto& l : labels) v.labels.add(l);
  v.entity_types.add(std::string(kNoneEntity));
  for (const auto& t : entity_types) v.entity_types.add(t);
  for (const auto& t : relation_types) v.relation_types.add(t);
  return v;
}

void Vocabularies::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  labels.save(dir / "labels.txt");
  entity_types.save(dir / "entity_types.txt");
  relation_types.save(dir / "relation_types.txt");
}

Vocabularies Vocabularies::load(const std::filesystem::path& dir) {
  Vocabularies v;
  v.labels = Vocabulary::load(dir / "labels.txt");
  v.entity_types = Vocabulary::load(dir / "entity_types.txt");
  v.relation_types = Vocabulary::load(dir / "relation_types.txt");
  if (v.labels.find(kOutside) != 0) throw VocabularyError("label vocabulary must start with O");
  if (v.entity_types.find(kNoneEntity) != 0) {
    throw VocabularyError("entity vocabulary must start with NoneEntity");
  }
  return v;
}

}  // namespace stsn
