#include "tquate/train.hpp"

#include <Eigen/Core>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "parallel.hpp"
#include "seeding.hpp"
#include "tquate/checkpoint.hpp"

namespace tquate {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;
using RowMap = Eigen::Map<RowMatrix>;

// Batches are split into fixed-size chunks whose gradients are reduced in
// chunk order, so results do not depend on the thread count.
constexpr std::size_t kChunk = 256;

double abs_pow(double x, double p) {
  const double a = std::fabs(x);
  if (p == 4.0) {
    const double s = a * a;
    return s * s;
  }
  if (p == 2.0) return a * a;
  if (p == 3.0) return a * a * a;
  if (p == 1.0) return a;
  return std::pow(a, p);
}

// d|x|^p / dx = p * sign(x) * |x|^(p-1)
double abs_pow_grad(double x, double p) {
  if (p == 4.0) return 4.0 * x * x * x;
  if (p == 2.0) return 2.0 * x;
  if (p == 3.0) return 3.0 * x * std::fabs(x);
  if (x == 0.0) return 0.0;
  const double sign = x > 0.0 ? 1.0 : -1.0;
  if (p == 1.0) return sign;
  return p * sign * std::pow(std::fabs(x), p - 1.0);
}

double quat_abs_pow(const Quaternion& q, double p) {
  return abs_pow(q.a, p) + abs_pow(q.b, p) + abs_pow(q.c, p) + abs_pow(q.d, p);
}

Quaternion quat_abs_pow_grad(const Quaternion& q, double p, double weight) {
  return {weight * abs_pow_grad(q.a, p), weight * abs_pow_grad(q.b, p), weight * abs_pow_grad(q.c, p),
          weight * abs_pow_grad(q.d, p)};
}

struct ChunkResult {
  double loss_sum = 0.0;
  double reg_sum = 0.0;
  GradientSet grads;
};

// Per-example terms of the objective over one chunk. Gradients are already
// multiplied by weight / batch_size.
ChunkResult chunk_objective(const ModelParams& params, std::span<const Quadruple> chunk, double loss_weight,
                            double reg_weight, double p, double inv_batch) {
  const std::size_t n = chunk.size();
  const std::size_t dim = params.dim;
  const std::size_t num_entities = params.num_entities();
  ChunkResult out;
  out.grads = GradientSet::zeros_like(params);

  std::vector<Query> queries(n);
  std::vector<RelationId> rels(n);
  std::vector<TimeId> times(n);
  for (std::size_t i = 0; i < n; ++i) {
    queries[i] = tail_query(chunk[i]);
    rels[i] = chunk[i].relation;
    times[i] = chunk[i].time;
  }

  RelationCache cache;
  QuaternionBatch head_relation;
  QuaternionBatch grad_hr(n, dim);
  if (loss_weight != 0.0) {
    CandidateScores scores = score_candidates(params, queries, cache, head_relation);
    // Scores become d(loss)/d(score) in place.
    const double g_scale = loss_weight * inv_batch;
    for (std::size_t i = 0; i < n; ++i) {
      auto row = scores.row(i);
      const EntityId gold = chunk[i].tail;
      double max_score = -std::numeric_limits<double>::infinity();
      for (double s : row) max_score = std::max(max_score, s);
      double sum = 0.0;
      for (double s : row) sum += std::exp(s - max_score);
      const double log_sum = max_score + std::log(sum);
      out.loss_sum += log_sum - row[gold];
      for (double& s : row) s = g_scale * std::exp(s - log_sum);
      row[gold] -= g_scale;
    }
    RowMap dscores(scores.values.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(num_entities));
    for (std::size_t e = 0; e < num_entities; ++e) out.grads.entity.touch(static_cast<std::uint32_t>(e));
    for (int c = 0; c < 4; ++c) {
      ConstRowMap hr(head_relation.component(c).data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
      ConstRowMap ent(params.entity.component(c).data(), static_cast<Eigen::Index>(num_entities),
                      static_cast<Eigen::Index>(dim));
      RowMap grad_ent(out.grads.entity.values.component(c).data(), static_cast<Eigen::Index>(num_entities),
                      static_cast<Eigen::Index>(dim));
      RowMap ghr(grad_hr.component(c).data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
      grad_ent.noalias() += dscores.transpose() * hr;
      ghr.noalias() = dscores * ent;
    }
  } else {
    cache = compose_relations(params, rels, times);
  }

  const double r_scale = reg_weight * inv_batch;
  QuaternionBatch grad_composite(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    const EntityId head = chunk[i].head;
    const EntityId tail = chunk[i].tail;
    for (std::size_t k = 0; k < dim; ++k) {
      const Quaternion qh = params.entity.get(head, k);
      const Quaternion composite = cache.composite.get(i, k);
      Quaternion g_composite{};
      if (loss_weight != 0.0) {
        const Quaternion g = grad_hr.get(i, k);
        out.grads.entity.add(head, k, g * composite.conj());
        g_composite = qh.conj() * g;
      }
      if (reg_weight != 0.0) {
        const Quaternion qt = params.entity.get(tail, k);
        out.reg_sum += quat_abs_pow(qh, p) + quat_abs_pow(composite, p) + quat_abs_pow(qt, p);
        out.grads.entity.add(head, k, quat_abs_pow_grad(qh, p, r_scale));
        out.grads.entity.add(tail, k, quat_abs_pow_grad(qt, p, r_scale));
        g_composite = g_composite + quat_abs_pow_grad(composite, p, r_scale);
      }
      grad_composite.set(i, k, g_composite);
    }
  }
  backprop_relations(params, cache, rels, times, grad_composite, out.grads);
  return out;
}

struct BatchObjective {
  double loss = 0.0;
  double reg = 0.0;
  GradientSet grads;
};

BatchObjective batch_objective(const ModelParams& params, std::span<const Quadruple> batch, double loss_weight,
                               double reg_weight, double p, unsigned threads) {
  BatchObjective out;
  out.grads = GradientSet::zeros_like(params);
  if (batch.empty()) return out;
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  const std::size_t chunks = (batch.size() + kChunk - 1) / kChunk;
  std::vector<ChunkResult> results(chunks);
  parallel_for(chunks, threads, [&](std::size_t c) {
    const std::size_t begin = c * kChunk;
    const std::size_t len = std::min(kChunk, batch.size() - begin);
    results[c] = chunk_objective(params, batch.subspan(begin, len), loss_weight, reg_weight, p, inv_batch);
  });
  double loss_sum = 0.0, reg_sum = 0.0;
  for (auto& r : results) {
    loss_sum += r.loss_sum;
    reg_sum += r.reg_sum;
    out.grads.accumulate(r.grads);
  }
  out.loss = loss_sum * inv_batch;
  out.reg = reg_sum * inv_batch;
  return out;
}

std::filesystem::path best_checkpoint_path(const std::filesystem::path& checkpoint) {
  auto p = checkpoint;
  p += ".best";
  return p;
}

}  // namespace

void TrainConfig::validate() const {
  if (dim < 1) throw ConfigError("dim must be >= 1");
  if (batch_size < 1) throw ConfigError("batch-size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("lr must be > 0");
  if (!(p >= 1.0) || !std::isfinite(p)) throw ConfigError("p must be >= 1");
  if (!(lambda_e >= 0.0) || !std::isfinite(lambda_e)) throw ConfigError("lambda-e must be >= 0");
  if (!(lambda_t >= 0.0) || !std::isfinite(lambda_t)) throw ConfigError("lambda-t must be >= 0");
  if (eval_every < 1) throw ConfigError("eval-every must be >= 1");
}

TrainConfig TrainConfig::icews14() {
  TrainConfig c;
  c.lambda_e = 0.0025;
  c.lambda_t = 0.1;
  return c;
}

TrainConfig TrainConfig::icews05_15() { return icews14(); }

TrainConfig TrainConfig::gdelt() {
  TrainConfig c;
  c.lambda_e = 0.0001;
  c.lambda_t = 0.1;
  return c;
}

Objective multiclass_log_loss(const ModelParams& params, std::span<const Quadruple> batch, unsigned threads) {
  auto r = batch_objective(params, batch, 1.0, 0.0, 1.0, threads);
  return {r.loss, std::move(r.grads)};
}

Objective embedding_regularizer(const ModelParams& params, std::span<const Quadruple> batch, double p) {
  auto r = batch_objective(params, batch, 0.0, 1.0, p, 1);
  return {r.reg, std::move(r.grads)};
}

Objective temporal_regularizer(const ModelParams& params, double p) {
  Objective out{0.0, GradientSet::zeros_like(params)};
  const std::size_t num_times = params.num_timestamps();
  if (num_times < 2) return out;
  const std::size_t dim = params.dim;
  const double inv_gaps = 1.0 / static_cast<double>(num_times - 1);
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < num_times; ++i) {
    const auto lo = static_cast<std::uint32_t>(i);
    const auto hi = static_cast<std::uint32_t>(i + 1);
    for (std::size_t k = 0; k < dim; ++k) {
      Quaternion diff = params.rot_time.get(hi, k) - params.rot_time.get(lo, k);
      if (params.periodic_enabled) diff = diff + (params.periodic_time.get(hi, k) - params.periodic_time.get(lo, k));
      sum += quat_abs_pow(diff, p);
      const Quaternion g = quat_abs_pow_grad(diff, p, inv_gaps);
      out.grads.rot_time.add(hi, k, g);
      out.grads.rot_time.add(lo, k, -1.0 * g);
      if (params.periodic_enabled) {
        out.grads.periodic_time.add(hi, k, g);
        out.grads.periodic_time.add(lo, k, -1.0 * g);
      }
    }
  }
  out.value = sum * inv_gaps;
  return out;
}

TotalLoss total_loss(const ModelParams& params, std::span<const Quadruple> batch, const TrainConfig& cfg) {
  auto fact_terms = batch_objective(params, batch, 1.0, cfg.lambda_e, cfg.p, cfg.threads);
  TotalLoss out;
  out.classification = fact_terms.loss;
  out.embedding = fact_terms.reg;
  out.grads = std::move(fact_terms.grads);
  if (cfg.lambda_t != 0.0) {
    auto temporal = temporal_regularizer(params, cfg.p);
    temporal.grads.scale(cfg.lambda_t);
    out.grads.accumulate(temporal.grads);
    out.temporal = temporal.value;
  }
  out.value = out.classification;
  if (cfg.lambda_e != 0.0) out.value += cfg.lambda_e * out.embedding;
  if (cfg.lambda_t != 0.0) out.value += cfg.lambda_t * out.temporal;
  return out;
}

std::string format_metrics_line(const EvalRecord& rec) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%zu\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%.3f", rec.epoch, rec.train_loss, rec.valid.mrr,
                rec.valid.hits1, rec.valid.hits3, rec.valid.hits10, rec.seconds);
  return buf;
}

TrainResult train(const TrainConfig& cfg, const LoadedDataset& data, const EvalCallback& on_eval) {
  cfg.validate();
  const auto& ds = data.data;
  TrainResult result;
  result.params = ModelParams::initialize(ds.num_entities, ds.num_relations, ds.num_timestamps, cfg.dim, cfg.seed,
                                          cfg.periodic_enabled);
  result.optimizer = AdagradState::zeros_like(result.params);
  result.best_params = result.params;
  if (cfg.max_epochs == 0) return result;

  const FilterIndex filter = FilterIndex::build(ds);
  std::ofstream metrics;
  if (!cfg.metrics.empty()) {
    const bool fresh = !std::filesystem::exists(cfg.metrics) || std::filesystem::file_size(cfg.metrics) == 0;
    metrics.open(cfg.metrics, std::ios::app);
    if (!metrics) throw TrainingError("cannot open metrics log " + cfg.metrics.string());
    if (fresh) metrics << "epoch\ttrain_loss\tvalid_mrr\tvalid_hits@1\tvalid_hits@3\tvalid_hits@10\tseconds\n";
  }

  const auto start = std::chrono::steady_clock::now();
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    BatchIterator batches(ds.augmented_train, cfg.batch_size, mix_seed(cfg.seed, epoch));
    double loss_sum = 0.0;
    std::size_t seen = 0;
    std::size_t batch_no = 0;
    for (auto batch = batches.next(); !batch.empty(); batch = batches.next(), ++batch_no) {
      auto loss = total_loss(result.params, batch, cfg);
      if (!std::isfinite(loss.value)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch_no) + " (L_c=" + std::to_string(loss.classification) +
                            ", omega=" + std::to_string(loss.embedding) +
                            ", lambda=" + std::to_string(loss.temporal) + ")");
      }
      adagrad_step(result.params, result.optimizer, loss.grads, cfg.learning_rate);
      loss_sum += loss.value * static_cast<double>(batch.size());
      seen += batch.size();
    }
    if (!result.params.all_finite()) throw TrainingError("non-finite parameters after epoch " + std::to_string(epoch));
    const double epoch_loss = loss_sum / static_cast<double>(std::max<std::size_t>(seen, 1));
    result.epoch_losses.push_back(epoch_loss);

    if (epoch % cfg.eval_every == 0 || epoch == cfg.max_epochs) {
      EvalRecord rec;
      rec.epoch = epoch;
      rec.train_loss = epoch_loss;
      rec.valid = evaluate(result.params, ds.valid, filter, cfg.threads);
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (metrics.is_open()) metrics << format_metrics_line(rec) << '\n' << std::flush;
      if (on_eval) on_eval(rec);
      if (rec.valid.mrr > result.best_valid_mrr) {
        result.best_valid_mrr = rec.valid.mrr;
        result.best_params = result.params;
        if (!cfg.checkpoint.empty()) {
          write_checkpoint(best_checkpoint_path(cfg.checkpoint), result.params, result.optimizer);
        }
      }
      rec.valid.ranks.clear();
      result.evals.push_back(std::move(rec));
    }
  }
  if (!cfg.checkpoint.empty()) write_checkpoint(cfg.checkpoint, result.params, result.optimizer);
  return result;
}

TrainResult train(const TrainConfig& cfg, const EvalCallback& on_eval) {
  cfg.validate();
  if (cfg.dataset.empty()) throw ConfigError("dataset path is required");
  return train(cfg, open_dataset(cfg.dataset), on_eval);
}

RankingResult ablation_eval(TrainConfig cfg, const LoadedDataset& data) {
  cfg.periodic_enabled = false;
  const auto trained = train(cfg, data);
  const FilterIndex filter = FilterIndex::build(data.data);
  return evaluate(trained.best_params, data.data.test, filter, cfg.threads);
}

}  // namespace tquate
