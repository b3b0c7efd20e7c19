#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>

#include "tquate/model.hpp"
#include "tquate/optimizer.hpp"

namespace tquate {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointHeader {
  std::uint32_t version = kCheckpointVersion;
  std::uint32_t num_entities = 0;
  std::uint32_t num_relations = 0;  // base relations
  std::uint32_t num_timestamps = 0;
  std::uint32_t dim = 0;
  bool periodic_enabled = true;
  std::uint64_t seed = 0;

  friend bool operator==(const CheckpointHeader&, const CheckpointHeader&) = default;
};

struct Checkpoint {
  ModelParams params;
  AdagradState optimizer;
};

// Layout: "TQUATECK", u32 version, u32 |E|, u32 |R|, u32 |T|, u32 dim,
// u8 periodic_enabled, u64 seed, then the entity, relation, rotation-time and
// periodic-time tables (components a, b, c, d in turn) as little-endian f64,
// then the Adagrad accumulators in the same order.
void write_checkpoint(const std::filesystem::path& path, const ModelParams& params, const AdagradState& state);
Checkpoint read_checkpoint(const std::filesystem::path& path);
CheckpointHeader read_checkpoint_header(const std::filesystem::path& path);

}  // namespace tquate
