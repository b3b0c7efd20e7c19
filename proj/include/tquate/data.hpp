#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tquate {

class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;
using TimeId = std::uint32_t;

/// A fact (h, r, t, tau). Relation ids >= num_relations denote inverse relations.
struct Quadruple {
  EntityId head = 0;
  RelationId relation = 0;
  EntityId tail = 0;
  TimeId time = 0;

  friend bool operator==(const Quadruple&, const Quadruple&) = default;
  friend auto operator<=>(const Quadruple&, const Quadruple&) = default;
};

/// Parsed chronological key of a timestamp label: ISO dates become days since
/// 1970-01-01, plain integers are taken as-is.
struct TimestampKey {
  enum class Kind { kDate, kInteger };
  Kind kind = Kind::kInteger;
  std::int64_t value = 0;
};

/// Returns nullopt when the label is neither an ISO date (YYYY-M-D) nor an integer.
std::optional<TimestampKey> parse_timestamp(std::string_view label);

class Vocabulary {
 public:
  Vocabulary() = default;
  /// Builds dense ids. Entities and relations are ordered by label bytes,
  /// timestamps by their parsed chronological key.
  static Vocabulary build(std::vector<std::string> entities, std::vector<std::string> relations,
                          std::vector<std::string> timestamps);

  std::size_t num_entities() const { return entities_.size(); }
  std::size_t num_relations() const { return relations_.size(); }
  std::size_t num_timestamps() const { return timestamps_.size(); }

  const std::string& entity(EntityId id) const { return entities_.at(id); }
  const std::string& relation(RelationId id) const { return relations_.at(id); }
  const std::string& timestamp(TimeId id) const { return timestamps_.at(id); }

  std::optional<EntityId> entity_id(std::string_view label) const;
  std::optional<RelationId> relation_id(std::string_view label) const;
  std::optional<TimeId> timestamp_id(std::string_view label) const;

  const std::vector<std::string>& entity_labels() const { return entities_; }
  const std::vector<std::string>& relation_labels() const { return relations_; }
  const std::vector<std::string>& timestamp_labels() const { return timestamps_; }

 private:
  std::vector<std::string> entities_;
  std::vector<std::string> relations_;
  std::vector<std::string> timestamps_;
  std::unordered_map<std::string, std::uint32_t> entity_index_;
  std::unordered_map<std::string, std::uint32_t> relation_index_;
  std::unordered_map<std::string, std::uint32_t> timestamp_index_;
};

struct QuadrupleDataset {
  std::size_t num_entities = 0;
  std::size_t num_relations = 0;  // base relations; inverse ids are offset by this
  std::size_t num_timestamps = 0;
  std::vector<Quadruple> train;
  std::vector<Quadruple> valid;
  std::vector<Quadruple> test;
  /// train followed by one reciprocal (t, r + num_relations, h, tau) per fact.
  std::vector<Quadruple> augmented_train;

  /// Fills augmented_train from train.
  void augment();
};

/// (t, r + |R|, h, tau) for a base relation, and back again for an inverse one.
Quadruple reciprocal(const Quadruple& q, std::size_t num_relations);

struct LoadedDataset {
  Vocabulary vocab;
  QuadrupleDataset data;
};

/// Reads train/valid/test (tab separated: head, relation, tail, timestamp) from
/// a directory. Files may also carry a ".txt" suffix.
LoadedDataset load_dataset(const std::filesystem::path& dir);

/// Binary cache of a loaded dataset ("TQDSCACH", version, labels, little-endian
/// u32 id arrays).
void save_dataset_cache(const LoadedDataset& ds, const std::filesystem::path& path);
LoadedDataset load_dataset_cache(const std::filesystem::path& path);
bool is_dataset_cache(const std::filesystem::path& path);

/// Loads a dataset directory or, when `path` is a cache file, the cache.
LoadedDataset open_dataset(const std::filesystem::path& path);

/// Time-wise filter: for a query (entity, relation, time) over 2|R| relation
/// ids, the set of entities completing a known fact at that same timestamp.
/// Head queries (?, r, t, tau) are keyed as (t, r + |R|, tau).
class FilterIndex {
 public:
  static FilterIndex build(const QuadrupleDataset& ds);

  /// Sorted answer ids, empty when the query key was never seen.
  std::span<const EntityId> answers(EntityId entity, RelationId relation, TimeId time) const;
  bool contains(EntityId entity, RelationId relation, TimeId time, EntityId answer) const;
  std::size_t num_keys() const { return index_.size(); }

 private:
  std::uint64_t key(EntityId e, RelationId r, TimeId t) const;

  std::uint64_t num_relations2_ = 0;
  std::uint64_t num_timestamps_ = 0;
  std::unordered_map<std::uint64_t, std::vector<EntityId>> index_;
};

/// One epoch of shuffled minibatches over augmented_train.
class BatchIterator {
 public:
  BatchIterator(std::span<const Quadruple> facts, std::size_t batch_size, std::uint64_t seed);

  /// Next batch, or an empty span once the epoch is exhausted.
  std::span<const Quadruple> next();
  std::size_t num_batches() const;

 private:
  std::vector<Quadruple> shuffled_;
  std::size_t batch_size_;
  std::size_t pos_ = 0;
};

}  // namespace tquate
