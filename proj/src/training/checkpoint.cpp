#include "stsn/training/checkpoint.hpp"

#include <cstring>

#include "stsn/errors.hpp"

namespace stsn {

namespace {

constexpr char kMagic[8] = {'S', 'T', 'S', 'N', 'C', 'K', 'P', 'T'};

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  template <typename T>
  void pod(const T& v) {
    out_.append(reinterpret_cast<const char*>(&v), sizeof v);
  }
  void str(std::string_view s) {
    pod<std::uint64_t>(s.size());
    out_.append(s);
  }
  void vocab(const Vocabulary& v) {
    pod<std::uint64_t>(static_cast<std::uint64_t>(v.size()));
    for (const auto& item : v.items()) str(item);
  }
  void matrix(const Matrix& m) {
    out_.append(reinterpret_cast<const char*>(m.data()),
                static_cast<size_t>(m.size()) * sizeof(double));
  }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  void need(std::uint64_t n) const {
    if (n > bytes_.size() - pos_) {
      throw CorruptCheckpoint("checkpoint is truncated at byte " + std::to_string(pos_));
    }
  }
  template <typename T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof v);
    pos_ += sizeof v;
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint64_t>();
    need(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  Vocabulary vocab() {
    const auto n = pod<std::uint64_t>();
    need(n * sizeof(std::uint64_t));
    Vocabulary v;
    for (std::uint64_t i = 0; i < n; ++i) v.add(str());
    if (static_cast<std::uint64_t>(v.size()) != n) throw CorruptCheckpoint("duplicate vocabulary item");
    return v;
  }
  void matrix(Matrix& m) {
    const auto n = static_cast<std::uint64_t>(m.size()) * sizeof(double);
    need(n);
    std::memcpy(m.data(), bytes_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const StsnModel& model, const TrainingState& state) {
  Writer w;
  w.bytes().append(kMagic, sizeof kMagic);
  w.pod(kCheckpointVersion);
  w.str(model.config().to_text());
  const auto& v = model.vocabularies();
  w.vocab(v.labels);
  w.vocab(v.entity_types);
  w.vocab(v.relation_types);
  w.str(model.backend().kind());
  w.str(model.backend().state());
  w.pod<std::uint64_t>(model.parameters().size());
  for (const auto& p : model.parameters()) {
    w.str(p->name);
    w.pod<std::int64_t>(p->value.rows());
    w.pod<std::int64_t>(p->value.cols());
    w.matrix(p->value);
    w.matrix(p->first_moment);
    w.matrix(p->second_moment);
  }
  w.pod(state.epoch);
  w.pod(state.step);
  w.pod(state.best_score);
  const auto checksum = fnv1a(w.bytes());
  w.pod(checksum);
  return std::move(w.bytes());
}

LoadedCheckpoint deserialize_checkpoint(std::string_view bytes) {
  if (bytes.size() < sizeof kMagic + sizeof(std::uint32_t) ||
      std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw CorruptCheckpoint("not a checkpoint file (bad magic)");
  }
  std::uint32_t version = 0;
  std::memcpy(&version, bytes.data() + sizeof kMagic, sizeof version);
  if (version != kCheckpointVersion) {
    throw VersionMismatch("checkpoint version " + std::to_string(version) + ", expected " +
                          std::to_string(kCheckpointVersion));
  }
  if (bytes.size() < sizeof kMagic + sizeof version + sizeof(std::uint64_t)) {
    throw CorruptCheckpoint("checkpoint is truncated");
  }
  const auto body = bytes.substr(0, bytes.size() - sizeof(std::uint64_t));
  std::uint64_t stored = 0;
  std::memcpy(&stored, bytes.data() + body.size(), sizeof stored);
  if (stored != fnv1a(body)) throw CorruptCheckpoint("checkpoint checksum mismatch");

  Reader r(body.substr(sizeof kMagic + sizeof version));
  Config config;
  try {
    config.merge_text(r.str());
  } catch (const ConfigError& e) {
    throw CorruptCheckpoint(std::string("checkpoint config: ") + e.what());
  }
  Vocabularies vocabs;
  vocabs.labels = r.vocab();
  vocabs.entity_types = r.vocab();
  vocabs.relation_types = r.vocab();
  const auto kind = r.str();
  const auto backend_state = r.str();
  if (kind != config.get_string("encoder.kind")) {
    throw CorruptCheckpoint("checkpoint backend kind '" + kind + "' disagrees with its config");
  }
  StsnModel model(config, std::move(vocabs), Corpus{}, backend_state);

  const auto count = r.pod<std::uint64_t>();
  if (count != model.parameters().size()) {
    throw CorruptCheckpoint("checkpoint holds " + std::to_string(count) + " parameters, model has " +
                            std::to_string(model.parameters().size()));
  }
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name = r.str();
    auto* p = model.parameters().find(name);
    if (p == nullptr) throw CorruptCheckpoint("checkpoint has unknown parameter '" + name + "'");
    const auto rows = r.pod<std::int64_t>();
    const auto cols = r.pod<std::int64_t>();
    if (rows != p->value.rows() || cols != p->value.cols()) {
      throw CorruptCheckpoint("parameter '" + name + "' has shape " + std::to_string(rows) + "x" +
                              std::to_string(cols) + " in the checkpoint");
    }
    r.matrix(p->value);
    r.matrix(p->first_moment);
    r.matrix(p->second_moment);
  }
  TrainingState state;
  state.epoch = r.pod<std::int64_t>();
  state.step = r.pod<std::int64_t>();
  state.best_score = r.pod<double>();
  if (!r.done()) throw CorruptCheckpoint("trailing bytes after checkpoint body");
  return {std::move(config), std::move(model), state};
}

void save_checkpoint(const std::filesystem::path& path, const StsnModel& model,
                     const TrainingState& state) {
  write_text_file_atomic(path, serialize_checkpoint(model, state));
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(read_text_file(path));
}

}  // namespace stsn
