#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tquate/data.hpp"
#include "tquate/eval.hpp"
#include "tquate/model.hpp"
#include "tquate/optimizer.hpp"

namespace tquate {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  std::size_t dim = 2000;
  std::size_t batch_size = 1000;
  std::size_t max_epochs = 200;
  double learning_rate = 0.1;
  double lambda_e = 0.0025;  // embedding regularizer weight
  double lambda_t = 0.1;     // periodic temporal regularizer weight
  double p = 4.0;            // norm order of both regularizers
  bool periodic_enabled = true;
  std::uint64_t seed = 0;
  std::size_t eval_every = 5;
  std::filesystem::path dataset;
  std::filesystem::path checkpoint;  // final state; the best-valid model goes to "<checkpoint>.best"
  std::filesystem::path metrics;     // append-only metrics log
  unsigned threads = 1;              // 1 = strict, bitwise reproducible

  /// Throws ConfigError on an invalid combination.
  void validate() const;

  static TrainConfig icews14();
  static TrainConfig icews05_15();
  static TrainConfig gdelt();
};

/// A scalar objective and its gradient with respect to every touched row.
struct Objective {
  double value = 0.0;
  GradientSet grads;
};

/// Mean over the batch of -log softmax over all candidate tails. Each batch
/// entry is a (possibly reciprocal) training fact; its tail is the gold answer.
Objective multiclass_log_loss(const ModelParams& params, std::span<const Quadruple> batch, unsigned threads = 1);

/// Mean over the batch of ||q_h||_p^p + ||q'_r(tau)||_p^p + ||q_t||_p^p.
Objective embedding_regularizer(const ModelParams& params, std::span<const Quadruple> batch, double p);

/// Mean over adjacent timestamp pairs of
/// ||q_tau(i+1) - q_tau(i) + q_tau'(i+1) - q_tau'(i)||_p^p on the raw tables.
Objective temporal_regularizer(const ModelParams& params, double p);

struct TotalLoss {
  double value = 0.0;
  double classification = 0.0;
  double embedding = 0.0;
  double temporal = 0.0;
  GradientSet grads;
};

/// L = L_c + lambda_e * Omega + lambda_t * Lambda.
TotalLoss total_loss(const ModelParams& params, std::span<const Quadruple> batch, const TrainConfig& cfg);

struct EvalRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  RankingResult valid;
  double seconds = 0.0;
};

struct TrainResult {
  ModelParams params;  // state after the last epoch
  AdagradState optimizer;
  ModelParams best_params;  // highest validation MRR seen
  double best_valid_mrr = -1.0;
  std::vector<double> epoch_losses;  // mean total loss per epoch
  std::vector<EvalRecord> evals;
};

using EvalCallback = std::function<void(const EvalRecord&)>;

/// Validation runs every eval_every epochs and after the final epoch.
TrainResult train(const TrainConfig& cfg, const LoadedDataset& data, const EvalCallback& on_eval = {});

/// Loads cfg.dataset and trains.
TrainResult train(const TrainConfig& cfg, const EvalCallback& on_eval = {});

/// One metrics-log line: epoch, train loss, valid MRR, Hits@1/3/10, seconds.
std::string format_metrics_line(const EvalRecord& rec);

/// Trains with periodic time disabled and evaluates on the test split.
RankingResult ablation_eval(TrainConfig cfg, const LoadedDataset& data);

}  // namespace tquate
