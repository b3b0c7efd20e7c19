#include "tquate/optimizer.hpp"

#include <cmath>

namespace tquate {

namespace {

void step_table(QuaternionBatch& table, QuaternionBatch& acc, const TableGradient& grad, double lr, double eps) {
  if (!table.same_shape(grad.values) || !table.same_shape(acc)) throw ShapeError("adagrad_step: shape mismatch");
  const std::size_t dim = table.dim();
  for (std::uint32_t row : grad.touched) {
    for (int c = 0; c < 4; ++c) {
      double* w = table.component(c).data() + row * dim;
      double* a = acc.component(c).data() + row * dim;
      const double* g = grad.values.component(c).data() + row * dim;
      for (std::size_t k = 0; k < dim; ++k) {
        a[k] += g[k] * g[k];
        w[k] -= lr * g[k] / (std::sqrt(a[k]) + eps);
      }
    }
  }
}

}  // namespace

AdagradState AdagradState::zeros_like(const ModelParams& params) {
  AdagradState s;
  s.entity = QuaternionBatch(params.entity.rows(), params.dim);
  s.relation = QuaternionBatch(params.relation.rows(), params.dim);
  s.rot_time = QuaternionBatch(params.rot_time.rows(), params.dim);
  s.periodic_time = QuaternionBatch(params.periodic_time.rows(), params.dim);
  return s;
}

void adagrad_step(ModelParams& params, AdagradState& state, const GradientSet& grads, double learning_rate) {
  step_table(params.entity, state.entity, grads.entity, learning_rate, state.epsilon);
  step_table(params.relation, state.relation, grads.relation, learning_rate, state.epsilon);
  step_table(params.rot_time, state.rot_time, grads.rot_time, learning_rate, state.epsilon);
  if (params.periodic_enabled) {
    step_table(params.periodic_time, state.periodic_time, grads.periodic_time, learning_rate, state.epsilon);
  }
}

}  // namespace tquate
