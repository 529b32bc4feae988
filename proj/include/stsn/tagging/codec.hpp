#pragma once

#include <compare>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace stsn {

/// A typed token span [start, end).
struct EntityMention {
  std::string type;
  int start = 0;
  int end = 0;

  int width() const { return end - start; }
  bool overlaps(const EntityMention& other) const {
    return start < other.end && other.start < end;
  }

  friend bool operator==(const EntityMention&, const EntityMention&) = default;
  friend auto operator<=>(const EntityMention& a, const EntityMention& b) {
    if (auto c = a.start <=> b.start; c != 0) return c;
    if (auto c = a.end <=> b.end; c != 0) return c;
    return a.type <=> b.type;
  }
};

using EntitySet = std::set<EntityMention>;

/// One composite label per token, e.g. "B-AE/B-DRUG", "I-AE", "O".
using TagSequence = std::vector<std::string>;

/// Ordered, index-stable set of strings. Used for composite BIO labels and
/// for entity/relation type inventories.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(const std::vector<std::string>& items);

  /// Returns the index of `item`, inserting it if absent.
  int add(const std::string& item);
  bool contains(std::string_view item) const;
  /// Index of `item`; throws VocabularyError if absent.
  int index(std::string_view item) const;
  /// Index of `item` or -1.
  int find(std::string_view item) const;
  const std::string& at(int index) const;
  int size() const { return static_cast<int>(items_.size()); }
  const std::vector<std::string>& items() const { return items_; }

  /// One item per line; the line number is the index.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.items_ == b.items_;
  }

 private:
  std::vector<std::string> items_;
  std::unordered_map<std::string, int> index_;
};

using LabelVocabulary = Vocabulary;

inline constexpr char kChannelSeparator = '/';
inline constexpr std::string_view kOutside = "O";

/// Of two overlapping mentions, the one tagged on the first channel: the
/// earlier start wins, then the longer one, then `a`.
const EntityMention& select_preceding(const EntityMention& a,
                                      const EntityMention& b);

/// Extended BIO encoding. Mentions that overlap another mention go in pairs:
/// the preceding one is tagged on channel 1 and the other is appended on
/// channel 2 after a "/".
TagSequence encode_bio(int n, const EntitySet& entities);

enum class DecodeMode {
  kStrict,   // orphan "I-" labels throw InvalidTransitionError
  kLenient,  // orphan "I-" labels open a new mention
};

EntitySet decode_bio(const TagSequence& tags,
                     DecodeMode mode = DecodeMode::kStrict);

struct TagViolation {
  enum class Kind {
    kMalformedLabel,
    kTooManyChannels,
    kEmptySecondChannel,
    kOrphanInside,
    kSecondChannelOutside,
  };
  Kind kind;
  int index;    // token position
  int channel;  // 1 or 2
  std::string message;
};

std::string_view to_string(TagViolation::Kind kind);

/// Returns every rule violation; an empty result means `tags` decodes
/// cleanly in strict mode.
std::vector<TagViolation> validate_tags(const TagSequence& tags);

/// The labels of one channel (1 or 2) as a plain BIO sequence.
TagSequence channel(const TagSequence& tags, int which);

/// Throws VocabularyError if `type` cannot be used as an entity type name.
void check_type_name(std::string_view type);

}  // namespace stsn
