#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "tquate/data.hpp"
#include "tquate/quaternion.hpp"

namespace tquate {

/// Embedding tables. Every table stores `dim` quaternion coordinates per row.
struct ModelParams {
  QuaternionBatch entity;         // |E| rows
  QuaternionBatch relation;       // 2|R| rows, inverse relations after the base ones
  QuaternionBatch rot_time;       // |T| rows, normalized on the fly before rotating
  QuaternionBatch periodic_time;  // |T| rows, enters through sin()
  std::size_t num_relations = 0;  // base relations
  std::size_t dim = 0;
  bool periodic_enabled = true;
  std::uint64_t seed = 0;

  /// Entries uniform in [-1/sqrt(dim), 1/sqrt(dim)]. The periodic table is
  /// zero when periodic time is disabled.
  static ModelParams initialize(std::size_t num_entities, std::size_t num_relations,
                                std::size_t num_timestamps, std::size_t dim, std::uint64_t seed,
                                bool periodic_enabled = true);

  std::size_t num_entities() const { return entity.rows(); }
  std::size_t num_timestamps() const { return rot_time.rows(); }

  bool all_finite() const;
  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Real parameters held by the model: (|E| + 2|R| + 2|T|) * dim * 4, with the
/// periodic-time table dropped when it is disabled.
std::uint64_t parameter_count(const ModelParams& params);

struct Query {
  EntityId entity = 0;
  RelationId relation = 0;
  TimeId time = 0;
};

inline Query tail_query(const Quadruple& q) { return {q.head, q.relation, q.time}; }

/// Forward intermediates of the time-sensitive relation, one row per query.
struct RelationCache {
  QuaternionBatch unit_time;     // n(q_tau)
  QuaternionBatch rotated;       // n(q_tau) q_r conj(n(q_tau))
  QuaternionBatch composite;     // rotated + sin(q_tau')
  std::vector<double> time_norm; // |q_tau| per coordinate, row-major
};

RelationCache compose_relations(const ModelParams& params, std::span<const RelationId> relations,
                                std::span<const TimeId> times);

/// q_r(tau) = n(q_tau) (x) q_r (x) conj(n(q_tau)).
QuaternionBatch time_aware_relation(const ModelParams& params, std::span<const RelationId> relations,
                                    std::span<const TimeId> times);

/// q'_r(tau) = q_r(tau) + sin(q_tau'), or q_r(tau) when periodic time is off.
QuaternionBatch time_sensitive_relation(const ModelParams& params, std::span<const RelationId> relations,
                                        std::span<const TimeId> times);

struct ScoreBatch {
  std::vector<double> scores;
  RelationCache relations;
  QuaternionBatch head_relation;  // q_h (x) q'_r(tau)
};

/// phi(h, r, t, tau) = (q_h (x) q'_r(tau)) . q_t for each quadruple.
ScoreBatch score(const ModelParams& params, std::span<const Quadruple> batch);

/// Dense row-major matrix of candidate scores, one row per query.
struct CandidateScores {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
  std::span<double> row(std::size_t i) { return {values.data() + i * cols, cols}; }
};

/// Scores every entity as the missing tail of each query. Head queries are
/// expressed with the inverse relation.
CandidateScores score_candidates(const ModelParams& params, std::span<const Query> queries);

/// As score_candidates, also returning the head-relation products it used.
CandidateScores score_candidates(const ModelParams& params, std::span<const Query> queries,
                                 RelationCache& relations, QuaternionBatch& head_relation);

std::vector<double> score_all_entities(const ModelParams& params, const Query& query);

/// Gradient for one table: dense values plus the list of rows that were touched.
struct TableGradient {
  QuaternionBatch values;
  std::vector<std::uint32_t> touched;
  std::vector<std::uint8_t> is_touched;

  TableGradient() = default;
  TableGradient(std::size_t rows, std::size_t dim);

  void touch(std::uint32_t row) {
    if (!is_touched[row]) {
      is_touched[row] = 1;
      touched.push_back(row);
    }
  }
  void add(std::uint32_t row, std::size_t k, const Quaternion& g);
  /// Adds `other` row by row; the touched order stays deterministic.
  void accumulate(const TableGradient& other);
  void scale(double s);
};

struct GradientSet {
  TableGradient entity;
  TableGradient relation;
  TableGradient rot_time;
  TableGradient periodic_time;

  static GradientSet zeros_like(const ModelParams& params);
  void accumulate(const GradientSet& other);
  void scale(double s);
};

/// Chains d(loss)/d(composite) rows into relation, rotation-time and
/// periodic-time gradients (through the normalization and the sine).
void backprop_relations(const ModelParams& params, const RelationCache& cache,
                        std::span<const RelationId> relations, std::span<const TimeId> times,
                        const QuaternionBatch& grad_composite, GradientSet& out);

/// Gradients of sum_i upstream[i] * phi_i for a batch scored with score().
GradientSet score_gradients(const ModelParams& params, std::span<const Quadruple> batch,
                            const ScoreBatch& forward, std::span<const double> upstream);

}  // namespace tquate
