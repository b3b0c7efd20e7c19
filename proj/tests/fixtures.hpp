#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <tuple>

#include "tquate/data.hpp"
#include "tquate/model.hpp"

namespace fixtures {

inline void randomize(tquate::QuaternionBatch& x, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  for (int c = 0; c < 4; ++c)
    for (double& v : x.component(c)) v = u(rng);
}

inline tquate::ModelParams random_model(std::size_t E, std::size_t R, std::size_t T, std::size_t dim,
                                        std::uint64_t seed, bool periodic = true) {
  auto m = tquate::ModelParams::initialize(E, R, T, dim, seed, periodic);
  std::mt19937_64 rng(seed ^ 0x5eedULL);
  randomize(m.entity, rng);
  randomize(m.relation, rng);
  randomize(m.rot_time, rng);
  if (periodic) randomize(m.periodic_time, rng);
  return m;
}

// Small-integer entities and relations with signed basis quaternions as time
// rotations: every score is an exact integer, so ties are exact everywhere.
inline tquate::ModelParams integer_model(std::size_t E, std::size_t R, std::size_t T, std::size_t dim,
                                         std::uint64_t seed) {
  auto m = tquate::ModelParams::initialize(E, R, T, dim, seed, true);
  std::mt19937_64 rng(seed ^ 0x1a7ULL);
  for (auto* t : {&m.entity, &m.relation})
    for (int c = 0; c < 4; ++c)
      for (double& v : t->component(c)) v = static_cast<double>(static_cast<int>(rng() % 3) - 1);
  for (std::size_t r = 0; r < T; ++r)
    for (std::size_t k = 0; k < dim; ++k) {
      double q[4] = {0, 0, 0, 0};
      q[rng() % 4] = (rng() % 2) ? 1.0 : -1.0;
      m.rot_time.set(r, k, {q[0], q[1], q[2], q[3]});
    }
  m.periodic_time.fill(0.0);
  return m;
}

// Distinct random facts spread over train/valid/test.
inline tquate::QuadrupleDataset random_dataset(std::size_t E, std::size_t R, std::size_t T, std::size_t n_train,
                                               std::size_t n_valid, std::size_t n_test, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::set<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t, std::uint32_t>> seen;
  auto draw = [&]() {
    for (;;) {
      tquate::Quadruple q{static_cast<std::uint32_t>(rng() % E), static_cast<std::uint32_t>(rng() % R),
                          static_cast<std::uint32_t>(rng() % E), static_cast<std::uint32_t>(rng() % T)};
      if (seen.emplace(q.head, q.relation, q.tail, q.time).second) return q;
    }
  };
  tquate::QuadrupleDataset ds;
  ds.num_entities = E;
  ds.num_relations = R;
  ds.num_timestamps = T;
  for (std::size_t i = 0; i < n_train; ++i) ds.train.push_back(draw());
  for (std::size_t i = 0; i < n_valid; ++i) ds.valid.push_back(draw());
  for (std::size_t i = 0; i < n_test; ++i) ds.test.push_back(draw());
  ds.augment();
  return ds;
}

inline tquate::LoadedDataset wrap(tquate::QuadrupleDataset ds) {
  tquate::LoadedDataset out;
  out.data = std::move(ds);
  return out;
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("tquate_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  std::filesystem::path write(const std::string& name, const std::string& content) const {
    const auto p = path_ / name;
    std::filesystem::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << content;
    return p;
  }

 private:
  std::filesystem::path path_;
};

}  // namespace fixtures
