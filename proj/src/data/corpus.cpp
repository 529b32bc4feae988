#include "stsn/data/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "stsn/errors.hpp"

namespace stsn {

using nlohmann::json;

namespace {

std::string at_record(size_t index) { return "record " + std::to_string(index) + ": "; }

EntityMention parse_entity(const json& j, size_t record, int n, const LoadOptions& options) {
  if (!j.is_object() || !j.contains("type") || !j.contains("start") || !j.contains("end")) {
    throw ValidationError(at_record(record) + "entity needs \"type\", \"start\" and \"end\"");
  }
  EntityMention m;
  try {
    m.type = j.at("type").get<std::string>();
    m.start = j.at("start").get<int>();
    m.end = j.at("end").get<int>();
  } catch (const json::exception& e) {
    throw ValidationError(at_record(record) + "bad entity field: " + e.what());
  }
  if (m.start < 0 || m.start >= m.end || m.end > n) {
    throw ValidationError(at_record(record) + "entity span [" + std::to_string(m.start) + "," +
                          std::to_string(m.end) + ") out of range for " + std::to_string(n) +
                          " tokens");
  }
  if (options.max_entity_width > 0 && m.width() > options.max_entity_width) {
    throw ValidationError(at_record(record) + "entity width " + std::to_string(m.width()) +
                          " exceeds the span width threshold " +
                          std::to_string(options.max_entity_width));
  }
  try {
    check_type_name(m.type);
  } catch (const Error& e) {
    throw ValidationError(at_record(record) + e.what());
  }
  return m;
}

SentenceExample parse_record(const json& j, size_t record, const LoadOptions& options) {
  if (!j.is_object() || !j.contains("tokens") || !j.at("tokens").is_array()) {
    throw ValidationError(at_record(record) + "missing \"tokens\" array");
  }
  SentenceExample ex;
  for (const auto& t : j.at("tokens")) {
    if (!t.is_string()) throw ValidationError(at_record(record) + "tokens must be strings");
    ex.tokens.push_back(t.get<std::string>());
  }
  const int n = ex.size();
  if (n > options.max_sentence_length) {
    throw ValidationError(at_record(record) + "sentence has " + std::to_string(n) +
                          " tokens, limit is " + std::to_string(options.max_sentence_length));
  }
  std::vector<EntityMention> listed;
  if (j.contains("entities")) {
    for (const auto& e : j.at("entities")) {
      listed.push_back(parse_entity(e, record, n, options));
      ex.entities.insert(listed.back());
    }
  }
  if (j.contains("relations")) {
    for (const auto& r : j.at("relations")) {
      if (!r.is_object() || !r.contains("type") || !r.contains("head") || !r.contains("tail")) {
        throw ValidationError(at_record(record) + "relation needs \"type\", \"head\", \"tail\"");
      }
      int head = 0;
      int tail = 0;
      RelationTuple rel;
      try {
        rel.type = r.at("type").get<std::string>();
        head = r.at("head").get<int>();
        tail = r.at("tail").get<int>();
      } catch (const json::exception& e) {
        throw ValidationError(at_record(record) + "bad relation field: " + e.what());
      }
      const int count = static_cast<int>(listed.size());
      if (head < 0 || head >= count || tail < 0 || tail >= count) {
        throw ValidationError(at_record(record) + "relation references entity index " +
                              std::to_string(head < 0 || head >= count ? head : tail) +
                              " but the record has " + std::to_string(count) + " entities");
      }
      if (rel.type.empty()) throw ValidationError(at_record(record) + "empty relation type");
      rel.head = listed[static_cast<size_t>(head)];
      rel.tail = listed[static_cast<size_t>(tail)];
      if (rel.head.start == rel.tail.start && rel.head.end == rel.tail.end) {
        throw ValidationError(at_record(record) + "relation head and tail are the same span");
      }
      ex.relations.insert(std::move(rel));
    }
  }
  return ex;
}

json entity_json(const EntityMention& m) {
  return json{{"type", m.type}, {"start", m.start}, {"end", m.end}};
}

// Entities in set order, plus any relation endpoints missing from the set.
json entities_and_relations(const EntitySet& entities, const RelationSet& relations,
                            json& out) {
  std::vector<EntityMention> listed(entities.begin(), entities.end());
  auto index_of = [&](const EntityMention& m) {
    for (size_t i = 0; i < listed.size(); ++i) {
      if (listed[i] == m) return static_cast<int>(i);
    }
    listed.push_back(m);
    return static_cast<int>(listed.size() - 1);
  };
  json rels = json::array();
  for (const auto& r : relations) {
    const int h = index_of(r.head);
    const int t = index_of(r.tail);
    rels.push_back(json{{"type", r.type}, {"head", h}, {"tail", t}});
  }
  json ents = json::array();
  for (const auto& m : listed) ents.push_back(entity_json(m));
  out["entities"] = std::move(ents);
  out["relations"] = std::move(rels);
  return out;
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what());
  }
}

}  // namespace

Corpus parse_corpus(std::string_view json_text, const LoadOptions& options) {
  const json doc = parse_json(json_text);
  if (!doc.is_array()) throw ParseError("corpus must be a JSON array of records");
  Corpus corpus;
  corpus.reserve(doc.size());
  for (size_t i = 0; i < doc.size(); ++i) corpus.push_back(parse_record(doc[i], i, options));
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, const LoadOptions& options) {
  return parse_corpus(read_text_file(path), options);
}

std::string corpus_to_json(const Corpus& corpus) {
  json doc = json::array();
  for (const auto& ex : corpus) {
    json rec;
    rec["tokens"] = ex.tokens;
    entities_and_relations(ex.entities, ex.relations, rec);
    doc.push_back(std::move(rec));
  }
  return doc.dump(1) + "\n";
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  write_text_file_atomic(path, corpus_to_json(corpus));
}

std::string predictions_to_json(const std::vector<PredictionRecord>& records) {
  json doc = json::array();
  for (const auto& p : records) {
    json rec;
    rec["id"] = p.id;
    entities_and_relations(p.entities, p.relations, rec);
    doc.push_back(std::move(rec));
  }
  return doc.dump(1) + "\n";
}

std::vector<PredictionRecord> parse_predictions(std::string_view json_text) {
  const json doc = parse_json(json_text);
  if (!doc.is_array()) throw ParseError("predictions must be a JSON array");
  std::vector<PredictionRecord> out;
  LoadOptions unbounded;
  unbounded.max_sentence_length = std::numeric_limits<int>::max();
  for (size_t i = 0; i < doc.size(); ++i) {
    const auto& rec = doc[i];
    if (!rec.is_object() || !rec.contains("id")) {
      throw ValidationError(at_record(i) + "prediction needs an \"id\"");
    }
    PredictionRecord p;
    p.id = rec.at("id").get<int>();
    // Reuse the corpus record parser with a token list long enough for any span.
    int extent = 0;
    for (const auto& e : rec.value("entities", json::array())) {
      extent = std::max(extent, e.value("end", 0));
    }
    json shaped = rec;
    shaped["tokens"] = std::vector<std::string>(static_cast<size_t>(extent), "");
    auto ex = parse_record(shaped, i, unbounded);
    p.entities = std::move(ex.entities);
    p.relations = std::move(ex.relations);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
  return parse_predictions(read_text_file(path));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

}  // namespace stsn
