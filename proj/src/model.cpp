#include "tquate/model.hpp"

#include <Eigen/Core>
#include <cmath>
#include <random>

namespace tquate {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;
using RowMap = Eigen::Map<RowMatrix>;

void check_ids(const ModelParams& params, std::span<const RelationId> relations, std::span<const TimeId> times) {
  if (relations.size() != times.size()) throw std::invalid_argument("relations and times differ in length");
  for (std::size_t i = 0; i < relations.size(); ++i) {
    if (relations[i] >= params.relation.rows()) throw std::out_of_range("relation id out of range");
    if (times[i] >= params.rot_time.rows()) throw std::out_of_range("timestamp id out of range");
  }
}

void check_entity(const ModelParams& params, EntityId e) {
  if (e >= params.entity.rows()) throw std::out_of_range("entity id out of range");
}

}  // namespace

ModelParams ModelParams::initialize(std::size_t num_entities, std::size_t num_relations,
                                    std::size_t num_timestamps, std::size_t dim, std::uint64_t seed,
                                    bool periodic_enabled) {
  if (dim == 0) throw std::invalid_argument("dim must be at least 1");
  ModelParams p;
  p.entity = QuaternionBatch(num_entities, dim);
  p.relation = QuaternionBatch(2 * num_relations, dim);
  p.rot_time = QuaternionBatch(num_timestamps, dim);
  p.periodic_time = QuaternionBatch(num_timestamps, dim);
  p.num_relations = num_relations;
  p.dim = dim;
  p.periodic_enabled = periodic_enabled;
  p.seed = seed;

  std::mt19937_64 rng(seed);
  const double s = 1.0 / std::sqrt(static_cast<double>(dim));
  std::uniform_real_distribution<double> uniform(-s, s);
  for (QuaternionBatch* table : {&p.entity, &p.relation, &p.rot_time, &p.periodic_time}) {
    for (int c = 0; c < 4; ++c)
      for (double& v : table->component(c)) v = uniform(rng);
  }
  if (!periodic_enabled) p.periodic_time.fill(0.0);
  return p;
}

bool ModelParams::all_finite() const {
  return entity.all_finite() && relation.all_finite() && rot_time.all_finite() && periodic_time.all_finite();
}

std::uint64_t parameter_count(const ModelParams& params) {
  const std::uint64_t time_tables = params.periodic_enabled ? 2 : 1;
  const std::uint64_t rows = params.entity.rows() + 2 * params.num_relations + time_tables * params.rot_time.rows();
  return rows * params.dim * 4;
}

RelationCache compose_relations(const ModelParams& params, std::span<const RelationId> relations,
                                std::span<const TimeId> times) {
  check_ids(params, relations, times);
  const std::size_t n = relations.size();
  const std::size_t dim = params.dim;
  RelationCache cache{QuaternionBatch(n, dim), QuaternionBatch(n, dim), QuaternionBatch(n, dim),
                      std::vector<double>(n * dim)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < dim; ++k) {
      const Quaternion q = params.rot_time.get(times[i], k);
      const double norm = q.norm();
      const Quaternion u = norm > 0.0 ? (1.0 / norm) * q : Quaternion::identity();
      const Quaternion rotated = u * params.relation.get(relations[i], k) * u.conj();
      Quaternion composite = rotated;
      if (params.periodic_enabled) {
        const Quaternion p = params.periodic_time.get(times[i], k);
        composite = composite + Quaternion{std::sin(p.a), std::sin(p.b), std::sin(p.c), std::sin(p.d)};
      }
      cache.unit_time.set(i, k, u);
      cache.rotated.set(i, k, rotated);
      cache.composite.set(i, k, composite);
      cache.time_norm[i * dim + k] = norm;
    }
  }
  return cache;
}

QuaternionBatch time_aware_relation(const ModelParams& params, std::span<const RelationId> relations,
                                    std::span<const TimeId> times) {
  return compose_relations(params, relations, times).rotated;
}

QuaternionBatch time_sensitive_relation(const ModelParams& params, std::span<const RelationId> relations,
                                        std::span<const TimeId> times) {
  return compose_relations(params, relations, times).composite;
}

ScoreBatch score(const ModelParams& params, std::span<const Quadruple> batch) {
  std::vector<RelationId> rels(batch.size());
  std::vector<TimeId> times(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    check_entity(params, batch[i].head);
    check_entity(params, batch[i].tail);
    rels[i] = batch[i].relation;
    times[i] = batch[i].time;
  }
  ScoreBatch out;
  out.relations = compose_relations(params, rels, times);
  const std::size_t dim = params.dim;
  out.head_relation = QuaternionBatch(batch.size(), dim);
  out.scores.assign(batch.size(), 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    double phi = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      const Quaternion hr = params.entity.get(batch[i].head, k) * out.relations.composite.get(i, k);
      out.head_relation.set(i, k, hr);
      phi += hr.dot(params.entity.get(batch[i].tail, k));
    }
    out.scores[i] = phi;
  }
  return out;
}

CandidateScores score_candidates(const ModelParams& params, std::span<const Query> queries,
                                 RelationCache& relations, QuaternionBatch& head_relation) {
  const std::size_t n = queries.size();
  const std::size_t dim = params.dim;
  std::vector<RelationId> rels(n);
  std::vector<TimeId> times(n);
  for (std::size_t i = 0; i < n; ++i) {
    check_entity(params, queries[i].entity);
    rels[i] = queries[i].relation;
    times[i] = queries[i].time;
  }
  relations = compose_relations(params, rels, times);
  head_relation = QuaternionBatch(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < dim; ++k) {
      head_relation.set(i, k, params.entity.get(queries[i].entity, k) * relations.composite.get(i, k));
    }
  }

  CandidateScores out{n, params.num_entities(), std::vector<double>(n * params.num_entities(), 0.0)};
  if (n == 0 || out.cols == 0) return out;
  RowMap scores(out.values.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(out.cols));
  for (int c = 0; c < 4; ++c) {
    ConstRowMap hr(head_relation.component(c).data(), static_cast<Eigen::Index>(n),
                   static_cast<Eigen::Index>(dim));
    ConstRowMap ent(params.entity.component(c).data(), static_cast<Eigen::Index>(out.cols),
                    static_cast<Eigen::Index>(dim));
    scores.noalias() += hr * ent.transpose();
  }
  return out;
}

CandidateScores score_candidates(const ModelParams& params, std::span<const Query> queries) {
  RelationCache relations;
  QuaternionBatch head_relation;
  return score_candidates(params, queries, relations, head_relation);
}

std::vector<double> score_all_entities(const ModelParams& params, const Query& query) {
  return std::move(score_candidates(params, std::span<const Query>(&query, 1)).values);
}

TableGradient::TableGradient(std::size_t rows, std::size_t dim) : values(rows, dim), is_touched(rows, 0) {}

void TableGradient::add(std::uint32_t row, std::size_t k, const Quaternion& g) {
  touch(row);
  const std::size_t i = row * values.dim() + k;
  values.a()[i] += g.a;
  values.b()[i] += g.b;
  values.c()[i] += g.c;
  values.d()[i] += g.d;
}

void TableGradient::accumulate(const TableGradient& other) {
  if (!values.same_shape(other.values)) throw ShapeError("TableGradient::accumulate: shape mismatch");
  const std::size_t dim = values.dim();
  for (std::uint32_t row : other.touched) {
    touch(row);
    for (int c = 0; c < 4; ++c) {
      double* dst = values.component(c).data() + row * dim;
      const double* src = other.values.component(c).data() + row * dim;
      for (std::size_t k = 0; k < dim; ++k) dst[k] += src[k];
    }
  }
}

void TableGradient::scale(double s) {
  const std::size_t dim = values.dim();
  for (std::uint32_t row : touched) {
    for (int c = 0; c < 4; ++c) {
      double* v = values.component(c).data() + row * dim;
      for (std::size_t k = 0; k < dim; ++k) v[k] *= s;
    }
  }
}

GradientSet GradientSet::zeros_like(const ModelParams& params) {
  return {TableGradient(params.entity.rows(), params.dim), TableGradient(params.relation.rows(), params.dim),
          TableGradient(params.rot_time.rows(), params.dim), TableGradient(params.periodic_time.rows(), params.dim)};
}

void GradientSet::accumulate(const GradientSet& other) {
  entity.accumulate(other.entity);
  relation.accumulate(other.relation);
  rot_time.accumulate(other.rot_time);
  periodic_time.accumulate(other.periodic_time);
}

void GradientSet::scale(double s) {
  entity.scale(s);
  relation.scale(s);
  rot_time.scale(s);
  periodic_time.scale(s);
}

void backprop_relations(const ModelParams& params, const RelationCache& cache,
                        std::span<const RelationId> relations, std::span<const TimeId> times,
                        const QuaternionBatch& grad_composite, GradientSet& out) {
  const std::size_t dim = params.dim;
  for (std::size_t i = 0; i < relations.size(); ++i) {
    const RelationId r = relations[i];
    const TimeId t = times[i];
    for (std::size_t k = 0; k < dim; ++k) {
      const Quaternion g = grad_composite.get(i, k);
      const Quaternion u = cache.unit_time.get(i, k);
      const Quaternion rel = params.relation.get(r, k);

      // rotated = u rel conj(u)
      out.relation.add(r, k, u.conj() * g * u);
      const double norm = cache.time_norm[i * dim + k];
      if (norm > 0.0) {
        const Quaternion grad_u = g * u * rel.conj() + g.conj() * u * rel;
        out.rot_time.add(t, k, (1.0 / norm) * (grad_u - grad_u.dot(u) * u));
      } else {
        out.rot_time.touch(t);
      }
      if (params.periodic_enabled) {
        const Quaternion p = params.periodic_time.get(t, k);
        out.periodic_time.add(t, k,
                              {g.a * std::cos(p.a), g.b * std::cos(p.b), g.c * std::cos(p.c), g.d * std::cos(p.d)});
      }
    }
  }
}

GradientSet score_gradients(const ModelParams& params, std::span<const Quadruple> batch,
                            const ScoreBatch& forward, std::span<const double> upstream) {
  if (upstream.size() != batch.size() || forward.scores.size() != batch.size()) {
    throw std::invalid_argument("score_gradients: batch, forward and upstream sizes differ");
  }
  const std::size_t dim = params.dim;
  GradientSet grads = GradientSet::zeros_like(params);
  QuaternionBatch grad_composite(batch.size(), dim);
  std::vector<RelationId> rels(batch.size());
  std::vector<TimeId> times(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& q = batch[i];
    rels[i] = q.relation;
    times[i] = q.time;
    const double up = upstream[i];
    for (std::size_t k = 0; k < dim; ++k) {
      const Quaternion head = params.entity.get(q.head, k);
      const Quaternion tail = params.entity.get(q.tail, k);
      const Quaternion composite = forward.relations.composite.get(i, k);
      grads.entity.add(q.tail, k, up * forward.head_relation.get(i, k));
      const Quaternion g_hr = up * tail;
      grads.entity.add(q.head, k, g_hr * composite.conj());
      grad_composite.set(i, k, head.conj() * g_hr);
    }
  }
  backprop_relations(params, forward.relations, rels, times, grad_composite, grads);
  return grads;
}

}  // namespace tquate
