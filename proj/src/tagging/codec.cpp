#include "stsn/tagging/codec.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "stsn/errors.hpp"

namespace stsn {

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary(const std::vector<std::string>& items) {
  for (const auto& item : items) add(item);
}

int Vocabulary::add(const std::string& item) {
  auto it = index_.find(item);
  if (it != index_.end()) return it->second;
  const int id = size();
  items_.push_back(item);
  index_.emplace(item, id);
  return id;
}

bool Vocabulary::contains(std::string_view item) const { return find(item) >= 0; }

int Vocabulary::find(std::string_view item) const {
  auto it = index_.find(std::string(item));
  return it == index_.end() ? -1 : it->second;
}

int Vocabulary::index(std::string_view item) const {
  const int id = find(item);
  if (id < 0) throw VocabularyError("unknown vocabulary item '" + std::string(item) + "'");
  return id;
}

const std::string& Vocabulary::at(int index) const {
  if (index < 0 || index >= size()) {
    throw VocabularyError("vocabulary index " + std::to_string(index) + " out of range");
  }
  return items_[static_cast<size_t>(index)];
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& item : items_) out << item << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  Vocabulary vocab;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (vocab.contains(line)) throw VocabularyError("duplicate vocabulary item '" + line + "'");
    vocab.add(line);
  }
  return vocab;
}

// ---------------------------------------------------------------------------
// Codec

namespace {

struct ChannelLabel {
  enum class Tag { kOutside, kBegin, kInside } tag = Tag::kOutside;
  std::string type;
};

std::optional<ChannelLabel> parse_channel_label(std::string_view label) {
  if (label == kOutside) return ChannelLabel{};
  if (label.size() > 2 && label[1] == '-' && (label[0] == 'B' || label[0] == 'I')) {
    return ChannelLabel{label[0] == 'B' ? ChannelLabel::Tag::kBegin : ChannelLabel::Tag::kInside,
                        std::string(label.substr(2))};
  }
  return std::nullopt;
}

std::vector<std::string_view> split_channels(std::string_view composite) {
  std::vector<std::string_view> parts;
  size_t from = 0;
  while (true) {
    const size_t at = composite.find(kChannelSeparator, from);
    parts.push_back(composite.substr(from, at == std::string_view::npos ? std::string_view::npos
                                                                        : at - from));
    if (at == std::string_view::npos) break;
    from = at + 1;
  }
  return parts;
}

void tag_mention(std::vector<std::string>& lane, const EntityMention& m) {
  lane[static_cast<size_t>(m.start)] = "B-" + m.type;
  for (int i = m.start + 1; i < m.end; ++i) lane[static_cast<size_t>(i)] = "I-" + m.type;
}

std::string describe(const EntityMention& m) {
  return m.type + "[" + std::to_string(m.start) + "," + std::to_string(m.end) + ")";
}

// Splits composite labels into two lanes, throwing on malformed input.
void split_lanes(const TagSequence& tags, std::vector<ChannelLabel>& first,
                 std::vector<ChannelLabel>& second) {
  first.assign(tags.size(), {});
  second.assign(tags.size(), {});
  for (size_t i = 0; i < tags.size(); ++i) {
    auto parts = split_channels(tags[i]);
    if (parts.size() > 2) {
      throw InvalidTransitionError("label '" + tags[i] + "' at " + std::to_string(i) +
                                   " has more than two channels");
    }
    for (size_t c = 0; c < parts.size(); ++c) {
      auto parsed = parse_channel_label(parts[c]);
      if (!parsed) {
        throw InvalidTransitionError("malformed label '" + tags[i] + "' at " + std::to_string(i));
      }
      (c == 0 ? first : second)[i] = std::move(*parsed);
    }
  }
}

void decode_lane(const std::vector<ChannelLabel>& lane, DecodeMode mode, int which,
                 EntitySet& out) {
  std::optional<EntityMention> open;
  auto close = [&](int at) {
    if (open) {
      open->end = at;
      out.insert(*open);
      open.reset();
    }
  };
  for (int i = 0; i < static_cast<int>(lane.size()); ++i) {
    const auto& label = lane[static_cast<size_t>(i)];
    switch (label.tag) {
      case ChannelLabel::Tag::kOutside:
        close(i);
        break;
      case ChannelLabel::Tag::kBegin:
        close(i);
        open = EntityMention{label.type, i, i + 1};
        break;
      case ChannelLabel::Tag::kInside:
        if (open && open->type == label.type) break;
        if (mode == DecodeMode::kStrict) {
          throw InvalidTransitionError("orphan I-" + label.type + " at index " +
                                       std::to_string(i) + " on channel " +
                                       std::to_string(which));
        }
        close(i);
        open = EntityMention{label.type, i, i + 1};
        break;
    }
  }
  close(static_cast<int>(lane.size()));
}

}  // namespace

void check_type_name(std::string_view type) {
  if (type.empty()) throw VocabularyError("empty entity type name");
  if (type.find(kChannelSeparator) != std::string_view::npos) {
    throw VocabularyError("entity type '" + std::string(type) + "' contains the reserved '/'");
  }
  for (char c : type) {
    if (c == '\n' || c == '\r') throw VocabularyError("entity type name contains a line break");
  }
}

const EntityMention& select_preceding(const EntityMention& a, const EntityMention& b) {
  if (!a.overlaps(b)) {
    throw std::invalid_argument("select_preceding: " + describe(a) + " and " + describe(b) +
                                " do not overlap");
  }
  if (a.start != b.start) return a.start < b.start ? a : b;
  if (a.width() != b.width()) return a.width() > b.width() ? a : b;
  return a;
}

TagSequence encode_bio(int n, const EntitySet& entities) {
  if (n < 0) throw BoundsError("negative token count");
  for (const auto& m : entities) {
    if (m.start < 0 || m.start >= m.end || m.end > n) {
      throw BoundsError("mention " + describe(m) + " out of range for " + std::to_string(n) +
                        " tokens");
    }
    check_type_name(m.type);
  }

  // Canonical order: start, longer first, type. Set semantics already removed
  // exact duplicates.
  std::vector<EntityMention> mentions(entities.begin(), entities.end());
  std::stable_sort(mentions.begin(), mentions.end(), [](const auto& x, const auto& y) {
    if (x.start != y.start) return x.start < y.start;
    if (x.width() != y.width()) return x.width() > y.width();
    return x.type < y.type;
  });

  // Overlap clusters by union-find.
  std::vector<size_t> parent(mentions.size());
  std::iota(parent.begin(), parent.end(), size_t{0});
  auto root = [&](size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (size_t i = 0; i < mentions.size(); ++i) {
    for (size_t j = i + 1; j < mentions.size() && mentions[j].start < mentions[i].end; ++j) {
      if (mentions[i].overlaps(mentions[j])) parent[root(j)] = root(i);
    }
  }
  std::vector<std::vector<size_t>> clusters(mentions.size());
  for (size_t i = 0; i < mentions.size(); ++i) clusters[root(i)].push_back(i);

  std::vector<std::string> first(static_cast<size_t>(n), std::string(kOutside));
  std::vector<std::string> second(static_cast<size_t>(n));
  for (const auto& cluster : clusters) {
    if (cluster.empty()) continue;
    if (cluster.size() > 2) {
      std::string what;
      for (size_t i : cluster) what += (what.empty() ? "" : ", ") + describe(mentions[i]);
      throw OverlapArityError("overlap cluster with " + std::to_string(cluster.size()) +
                              " mentions: " + what);
    }
    if (cluster.size() == 1) {
      tag_mention(first, mentions[cluster[0]]);
      continue;
    }
    const auto& a = mentions[cluster[0]];
    const auto& b = mentions[cluster[1]];
    const auto& lead = select_preceding(a, b);
    tag_mention(first, lead);
    tag_mention(second, &lead == &a ? b : a);
  }

  TagSequence tags(static_cast<size_t>(n));
  for (size_t i = 0; i < tags.size(); ++i) {
    tags[i] = second[i].empty() ? std::move(first[i]) : first[i] + kChannelSeparator + second[i];
  }
  return tags;
}

EntitySet decode_bio(const TagSequence& tags, DecodeMode mode) {
  if (mode == DecodeMode::kStrict) {
    auto violations = validate_tags(tags);
    if (!violations.empty()) throw InvalidTransitionError(violations.front().message);
  }
  std::vector<ChannelLabel> first;
  std::vector<ChannelLabel> second;
  split_lanes(tags, first, second);
  EntitySet out;
  decode_lane(first, mode, 1, out);
  decode_lane(second, mode, 2, out);
  return out;
}

std::string_view to_string(TagViolation::Kind kind) {
  switch (kind) {
    case TagViolation::Kind::kMalformedLabel: return "malformed-label";
    case TagViolation::Kind::kTooManyChannels: return "too-many-channels";
    case TagViolation::Kind::kEmptySecondChannel: return "empty-second-channel";
    case TagViolation::Kind::kOrphanInside: return "orphan-I";
    case TagViolation::Kind::kSecondChannelOutside: return "second-channel-outside";
  }
  return "unknown";
}

std::vector<TagViolation> validate_tags(const TagSequence& tags) {
  std::vector<TagViolation> violations;
  auto report = [&](TagViolation::Kind kind, int index, int ch, std::string message) {
    violations.push_back({kind, index, ch,
                          std::string(to_string(kind)) + " at index " + std::to_string(index) +
                              ": " + message});
  };

  // Per channel: the label at the previous position, for transition checks.
  std::optional<ChannelLabel> prev[2];
  for (int i = 0; i < static_cast<int>(tags.size()); ++i) {
    const auto& composite = tags[static_cast<size_t>(i)];
    auto parts = split_channels(composite);
    std::optional<ChannelLabel> cur[2] = {ChannelLabel{}, ChannelLabel{}};
    if (parts.size() > 2) {
      report(TagViolation::Kind::kTooManyChannels, i, 3, "'" + composite + "'");
      parts.resize(2);
    }
    for (size_t c = 0; c < parts.size(); ++c) {
      cur[c] = parse_channel_label(parts[c]);
      if (!cur[c]) {
        report(TagViolation::Kind::kMalformedLabel, i, static_cast<int>(c) + 1,
               "'" + std::string(parts[c]) + "'");
      }
    }
    if (parts.size() == 2 && cur[1] && cur[1]->tag == ChannelLabel::Tag::kOutside) {
      report(TagViolation::Kind::kEmptySecondChannel, i, 2, "'" + composite + "'");
    }
    for (int c = 0; c < 2; ++c) {
      if (!cur[c] || cur[c]->tag != ChannelLabel::Tag::kInside) continue;
      const bool continues = prev[c] && prev[c]->tag != ChannelLabel::Tag::kOutside &&
                             prev[c]->type == cur[c]->type;
      if (!continues) {
        report(TagViolation::Kind::kOrphanInside, i, c + 1,
               "I-" + cur[c]->type + " does not continue a mention of the same type");
      }
    }
    // A second-channel mention has to start inside a first-channel mention.
    if (cur[1] && cur[1]->tag == ChannelLabel::Tag::kBegin && cur[0] &&
        cur[0]->tag == ChannelLabel::Tag::kOutside) {
      report(TagViolation::Kind::kSecondChannelOutside, i, 2,
             "B-" + cur[1]->type + " starts outside every first-channel mention");
    }
    prev[0] = cur[0];
    prev[1] = cur[1];
  }
  return violations;
}

TagSequence channel(const TagSequence& tags, int which) {
  if (which != 1 && which != 2) throw std::invalid_argument("channel must be 1 or 2");
  TagSequence out;
  out.reserve(tags.size());
  for (const auto& composite : tags) {
    auto parts = split_channels(composite);
    const size_t c = static_cast<size_t>(which - 1);
    out.emplace_back(c < parts.size() ? std::string(parts[c]) : std::string(kOutside));
  }
  return out;
}

}  // namespace stsn
