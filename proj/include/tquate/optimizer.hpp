#pragma once

#include "tquate/model.hpp"

namespace tquate {

/// Accumulated squared gradients, one table per parameter table.
struct AdagradState {
  QuaternionBatch entity;
  QuaternionBatch relation;
  QuaternionBatch rot_time;
  QuaternionBatch periodic_time;
  double epsilon = 1e-10;

  static AdagradState zeros_like(const ModelParams& params);
  friend bool operator==(const AdagradState&, const AdagradState&) = default;
};

/// acc += g^2; param -= lr * g / (sqrt(acc) + eps), on touched rows only.
void adagrad_step(ModelParams& params, AdagradState& state, const GradientSet& grads, double learning_rate);

}  // namespace tquate
