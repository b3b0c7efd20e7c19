#include "tquate/data.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <numeric>
#include <set>
#include <unordered_set>

#include "binary_io.hpp"

namespace tquate {

namespace {

constexpr char kCacheMagic[8] = {'T', 'Q', 'D', 'S', 'C', 'A', 'C', 'H'};
constexpr std::uint32_t kCacheVersion = 1;

std::optional<std::int64_t> parse_int(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

struct RawFact {
  std::string head, relation, tail, time;
};

std::filesystem::path find_split(const std::filesystem::path& dir, const std::string& name) {
  for (const auto& candidate : {dir / name, dir / (name + ".txt")}) {
    if (std::filesystem::is_regular_file(candidate)) return candidate;
  }
  throw LoadError("missing split file '" + name + "' in " + dir.string());
}

std::vector<RawFact> read_split(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  std::vector<RawFact> facts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 4) {
      throw LoadError(path.string() + ":" + std::to_string(line_no) + ": expected 4 tab-separated fields, got " +
                      std::to_string(fields.size()));
    }
    for (const auto& f : fields) {
      if (f.empty()) throw LoadError(path.string() + ":" + std::to_string(line_no) + ": empty field");
    }
    if (!parse_timestamp(fields[3])) {
      throw LoadError(path.string() + ":" + std::to_string(line_no) + ": unparsable timestamp '" +
                      std::string(fields[3]) + "'");
    }
    facts.push_back({std::string(fields[0]), std::string(fields[1]), std::string(fields[2]),
                     std::string(fields[3])});
  }
  if (facts.empty()) throw LoadError("split " + path.string() + " is empty");
  return facts;
}

std::vector<std::string> unique_sorted(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

template <typename Map>
std::optional<std::uint32_t> lookup(const Map& m, std::string_view label) {
  auto it = m.find(std::string(label));
  if (it == m.end()) return std::nullopt;
  return it->second;
}

void check_disjoint(const std::vector<Quadruple>& a, const std::vector<Quadruple>& b, const char* name_a,
                    const char* name_b) {
  std::set<Quadruple> seen(a.begin(), a.end());
  for (const auto& q : b) {
    if (seen.count(q)) throw LoadError(std::string("splits ") + name_a + " and " + name_b + " share a fact");
  }
}

}  // namespace

std::optional<TimestampKey> parse_timestamp(std::string_view label) {
  if (auto v = parse_int(label)) return TimestampKey{TimestampKey::Kind::kInteger, *v};

  // YYYY-M-D, zero padding optional.
  const std::size_t p1 = label.find('-', 1);
  if (p1 == std::string_view::npos) return std::nullopt;
  const std::size_t p2 = label.find('-', p1 + 1);
  if (p2 == std::string_view::npos) return std::nullopt;
  auto y = parse_int(label.substr(0, p1));
  auto m = parse_int(label.substr(p1 + 1, p2 - p1 - 1));
  auto d = parse_int(label.substr(p2 + 1));
  if (!y || !m || !d || *m < 1 || *m > 12 || *d < 1 || *d > 31) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{static_cast<int>(*y)},
                                        std::chrono::month{static_cast<unsigned>(*m)},
                                        std::chrono::day{static_cast<unsigned>(*d)}};
  if (!ymd.ok()) return std::nullopt;
  const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
  return TimestampKey{TimestampKey::Kind::kDate, static_cast<std::int64_t>(days)};
}

Vocabulary Vocabulary::build(std::vector<std::string> entities, std::vector<std::string> relations,
                             std::vector<std::string> timestamps) {
  Vocabulary v;
  v.entities_ = unique_sorted(std::move(entities));
  v.relations_ = unique_sorted(std::move(relations));
  timestamps = unique_sorted(std::move(timestamps));

  std::vector<std::pair<std::int64_t, std::string>> keyed;
  keyed.reserve(timestamps.size());
  std::optional<TimestampKey::Kind> kind;
  for (auto& label : timestamps) {
    const auto key = parse_timestamp(label);
    if (!key) throw LoadError("unparsable timestamp '" + label + "'");
    if (kind && *kind != key->kind) throw LoadError("timestamps mix ISO dates and plain integers");
    kind = key->kind;
    keyed.emplace_back(key->value, std::move(label));
  }
  std::sort(keyed.begin(), keyed.end());
  for (auto& [_, label] : keyed) v.timestamps_.push_back(std::move(label));

  for (std::uint32_t i = 0; i < v.entities_.size(); ++i) v.entity_index_.emplace(v.entities_[i], i);
  for (std::uint32_t i = 0; i < v.relations_.size(); ++i) v.relation_index_.emplace(v.relations_[i], i);
  for (std::uint32_t i = 0; i < v.timestamps_.size(); ++i) v.timestamp_index_.emplace(v.timestamps_[i], i);
  return v;
}

std::optional<EntityId> Vocabulary::entity_id(std::string_view label) const {
  return lookup(entity_index_, label);
}
std::optional<RelationId> Vocabulary::relation_id(std::string_view label) const {
  return lookup(relation_index_, label);
}
std::optional<TimeId> Vocabulary::timestamp_id(std::string_view label) const {
  return lookup(timestamp_index_, label);
}

Quadruple reciprocal(const Quadruple& q, std::size_t num_relations) {
  const auto nr = static_cast<RelationId>(num_relations);
  const RelationId r = q.relation < nr ? q.relation + nr : q.relation - nr;
  return {q.tail, r, q.head, q.time};
}

void QuadrupleDataset::augment() {
  augmented_train.clear();
  augmented_train.reserve(2 * train.size());
  augmented_train.insert(augmented_train.end(), train.begin(), train.end());
  for (const auto& q : train) augmented_train.push_back(reciprocal(q, num_relations));
}

LoadedDataset load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw LoadError("dataset directory not found: " + dir.string());
  const auto train = read_split(find_split(dir, "train"));
  const auto valid = read_split(find_split(dir, "valid"));
  const auto test = read_split(find_split(dir, "test"));

  std::vector<std::string> ents, rels, times;
  for (const auto* split : {&train, &valid, &test}) {
    for (const auto& f : *split) {
      ents.push_back(f.head);
      ents.push_back(f.tail);
      rels.push_back(f.relation);
      times.push_back(f.time);
    }
  }
  LoadedDataset out;
  out.vocab = Vocabulary::build(std::move(ents), std::move(rels), std::move(times));
  const auto& vocab = out.vocab;

  auto encode = [&](const std::vector<RawFact>& raw) {
    std::vector<Quadruple> qs;
    qs.reserve(raw.size());
    for (const auto& f : raw) {
      qs.push_back({*vocab.entity_id(f.head), *vocab.relation_id(f.relation), *vocab.entity_id(f.tail),
                    *vocab.timestamp_id(f.time)});
    }
    return qs;
  };
  auto& ds = out.data;
  ds.num_entities = vocab.num_entities();
  ds.num_relations = vocab.num_relations();
  ds.num_timestamps = vocab.num_timestamps();
  ds.train = encode(train);
  ds.valid = encode(valid);
  ds.test = encode(test);
  check_disjoint(ds.train, ds.valid, "train", "valid");
  check_disjoint(ds.train, ds.test, "train", "test");
  check_disjoint(ds.valid, ds.test, "valid", "test");
  ds.augment();
  return out;
}

void save_dataset_cache(const LoadedDataset& ds, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw LoadError("cannot write " + path.string());
  os.write(kCacheMagic, sizeof(kCacheMagic));
  io::write_u32(os, kCacheVersion);
  for (const auto* labels :
       {&ds.vocab.entity_labels(), &ds.vocab.relation_labels(), &ds.vocab.timestamp_labels()}) {
    io::write_u32(os, static_cast<std::uint32_t>(labels->size()));
    for (const auto& s : *labels) io::write_string(os, s);
  }
  for (const auto* split : {&ds.data.train, &ds.data.valid, &ds.data.test}) {
    io::write_u32(os, static_cast<std::uint32_t>(split->size()));
    for (const auto& q : *split) {
      io::write_u32(os, q.head);
      io::write_u32(os, q.relation);
      io::write_u32(os, q.tail);
      io::write_u32(os, q.time);
    }
  }
  if (!os) throw LoadError("write failed: " + path.string());
}

bool is_dataset_cache(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) return false;
  std::ifstream is(path, std::ios::binary);
  char magic[sizeof(kCacheMagic)] = {};
  is.read(magic, sizeof(magic));
  return is.gcount() == sizeof(magic) && std::equal(magic, magic + sizeof(magic), kCacheMagic);
}

LoadedDataset load_dataset_cache(const std::filesystem::path& path) {
  if (!is_dataset_cache(path)) throw LoadError(path.string() + " is not a dataset cache");
  std::ifstream is(path, std::ios::binary);
  is.ignore(sizeof(kCacheMagic));
  try {
    const std::uint32_t version = io::read_u32(is);
    if (version != kCacheVersion) {
      throw LoadError("unsupported dataset cache version " + std::to_string(version));
    }
    std::vector<std::string> lists[3];
    for (auto& list : lists) {
      const std::uint32_t n = io::read_u32(is);
      list.reserve(n);
      for (std::uint32_t i = 0; i < n; ++i) list.push_back(io::read_string(is));
    }
    LoadedDataset out;
    out.vocab = Vocabulary::build(lists[0], lists[1], lists[2]);
    if (out.vocab.entity_labels() != lists[0] || out.vocab.relation_labels() != lists[1] ||
        out.vocab.timestamp_labels() != lists[2]) {
      throw LoadError("dataset cache labels are not in canonical order");
    }
    auto& ds = out.data;
    ds.num_entities = lists[0].size();
    ds.num_relations = lists[1].size();
    ds.num_timestamps = lists[2].size();
    for (auto* split : {&ds.train, &ds.valid, &ds.test}) {
      const std::uint32_t n = io::read_u32(is);
      split->resize(n);
      for (auto& q : *split) {
        q.head = io::read_u32(is);
        q.relation = io::read_u32(is);
        q.tail = io::read_u32(is);
        q.time = io::read_u32(is);
        if (q.head >= ds.num_entities || q.tail >= ds.num_entities || q.relation >= ds.num_relations ||
            q.time >= ds.num_timestamps) {
          throw LoadError("dataset cache contains an out-of-range id");
        }
      }
    }
    ds.augment();
    return out;
  } catch (const io::TruncatedError& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
}

LoadedDataset open_dataset(const std::filesystem::path& path) {
  if (is_dataset_cache(path)) return load_dataset_cache(path);
  return load_dataset(path);
}

std::uint64_t FilterIndex::key(EntityId e, RelationId r, TimeId t) const {
  return (static_cast<std::uint64_t>(e) * num_relations2_ + r) * num_timestamps_ + t;
}

FilterIndex FilterIndex::build(const QuadrupleDataset& ds) {
  FilterIndex idx;
  idx.num_relations2_ = 2 * ds.num_relations;
  idx.num_timestamps_ = ds.num_timestamps;
  for (const auto* split : {&ds.train, &ds.valid, &ds.test}) {
    for (const auto& q : *split) {
      idx.index_[idx.key(q.head, q.relation, q.time)].push_back(q.tail);
      const auto rq = reciprocal(q, ds.num_relations);
      idx.index_[idx.key(rq.head, rq.relation, rq.time)].push_back(rq.tail);
    }
  }
  for (auto& [_, v] : idx.index_) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return idx;
}

std::span<const EntityId> FilterIndex::answers(EntityId entity, RelationId relation, TimeId time) const {
  auto it = index_.find(key(entity, relation, time));
  if (it == index_.end()) return {};
  return it->second;
}

bool FilterIndex::contains(EntityId entity, RelationId relation, TimeId time, EntityId answer) const {
  const auto a = answers(entity, relation, time);
  return std::binary_search(a.begin(), a.end(), answer);
}

BatchIterator::BatchIterator(std::span<const Quadruple> facts, std::size_t batch_size, std::uint64_t seed)
    : shuffled_(facts.begin(), facts.end()), batch_size_(batch_size) {
  if (batch_size_ == 0) throw std::invalid_argument("batch_size must be positive");
  std::mt19937_64 rng(seed);
  std::shuffle(shuffled_.begin(), shuffled_.end(), rng);
}

std::span<const Quadruple> BatchIterator::next() {
  if (pos_ >= shuffled_.size()) return {};
  const std::size_t n = std::min(batch_size_, shuffled_.size() - pos_);
  std::span<const Quadruple> out(shuffled_.data() + pos_, n);
  pos_ += n;
  return out;
}

std::size_t BatchIterator::num_batches() const { return (shuffled_.size() + batch_size_ - 1) / batch_size_; }

}  // namespace tquate
