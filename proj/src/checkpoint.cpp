#include "tquate/checkpoint.hpp"

#include <algorithm>
#include <fstream>

#include "binary_io.hpp"

namespace tquate {

namespace {

constexpr char kMagic[8] = {'T', 'Q', 'U', 'A', 'T', 'E', 'C', 'K'};

void write_table(std::ostream& os, const QuaternionBatch& table) {
  for (int c = 0; c < 4; ++c) io::write_f64s(os, table.component(c));
}

QuaternionBatch read_table(std::istream& is, std::size_t rows, std::size_t dim) {
  QuaternionBatch table(rows, dim);
  for (int c = 0; c < 4; ++c) io::read_f64s(is, table.component(c));
  return table;
}

CheckpointHeader read_header(std::istream& is, const std::filesystem::path& path) {
  char magic[sizeof(kMagic)];
  io::read_exact(is, magic, sizeof(magic));
  if (!std::equal(magic, magic + sizeof(magic), kMagic)) {
    throw CheckpointError(path.string() + ": not a checkpoint (bad magic)");
  }
  CheckpointHeader h;
  h.version = io::read_u32(is);
  if (h.version != kCheckpointVersion) {
    throw CheckpointError(path.string() + ": unsupported checkpoint version " + std::to_string(h.version));
  }
  h.num_entities = io::read_u32(is);
  h.num_relations = io::read_u32(is);
  h.num_timestamps = io::read_u32(is);
  h.dim = io::read_u32(is);
  const std::uint8_t periodic = io::read_u8(is);
  if (periodic > 1) throw CheckpointError(path.string() + ": corrupt periodic flag");
  h.periodic_enabled = periodic == 1;
  h.seed = io::read_u64(is);
  if (h.dim == 0) throw CheckpointError(path.string() + ": dim is zero");
  return h;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const ModelParams& params, const AdagradState& state) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw CheckpointError("cannot write " + path.string());
  os.write(kMagic, sizeof(kMagic));
  io::write_u32(os, kCheckpointVersion);
  io::write_u32(os, static_cast<std::uint32_t>(params.num_entities()));
  io::write_u32(os, static_cast<std::uint32_t>(params.num_relations));
  io::write_u32(os, static_cast<std::uint32_t>(params.num_timestamps()));
  io::write_u32(os, static_cast<std::uint32_t>(params.dim));
  io::write_u8(os, params.periodic_enabled ? 1 : 0);
  io::write_u64(os, params.seed);
  for (const auto* t : {&params.entity, &params.relation, &params.rot_time, &params.periodic_time}) write_table(os, *t);
  for (const auto* t : {&state.entity, &state.relation, &state.rot_time, &state.periodic_time}) write_table(os, *t);
  if (!os) throw CheckpointError("write failed: " + path.string());
}

CheckpointHeader read_checkpoint_header(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open " + path.string());
  try {
    return read_header(is, path);
  } catch (const io::TruncatedError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open " + path.string());
  try {
    const CheckpointHeader h = read_header(is, path);
    Checkpoint ck;
    auto& p = ck.params;
    p.num_relations = h.num_relations;
    p.dim = h.dim;
    p.periodic_enabled = h.periodic_enabled;
    p.seed = h.seed;
    const std::size_t rows[4] = {h.num_entities, 2 * std::size_t{h.num_relations}, h.num_timestamps,
                                 h.num_timestamps};
    QuaternionBatch* tables[4] = {&p.entity, &p.relation, &p.rot_time, &p.periodic_time};
    for (int i = 0; i < 4; ++i) *tables[i] = read_table(is, rows[i], h.dim);
    QuaternionBatch* accs[4] = {&ck.optimizer.entity, &ck.optimizer.relation, &ck.optimizer.rot_time,
                                &ck.optimizer.periodic_time};
    for (int i = 0; i < 4; ++i) *accs[i] = read_table(is, rows[i], h.dim);
    if (is.peek() != std::char_traits<char>::eof()) throw CheckpointError(path.string() + ": trailing bytes");
    return ck;
  } catch (const io::TruncatedError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

}  // namespace tquate
