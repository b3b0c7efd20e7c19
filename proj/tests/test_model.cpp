#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "oracle.hpp"
#include "tquate/model.hpp"

using namespace tquate;

namespace {

void expect_batch_near(const QuaternionBatch& got, std::size_t row, const oracle::Q& ref, std::size_t k, double tol) {
  const auto q = got.get(row, k);
  EXPECT_NEAR(q.a, ref[0], tol);
  EXPECT_NEAR(q.b, ref[1], tol);
  EXPECT_NEAR(q.c, ref[2], tol);
  EXPECT_NEAR(q.d, ref[3], tol);
}

}  // namespace

TEST(Model, InitializationBoundsAndShapes) {
  const auto m = ModelParams::initialize(5, 3, 4, 9, 42);
  EXPECT_EQ(m.entity.rows(), 5u);
  EXPECT_EQ(m.relation.rows(), 6u);
  EXPECT_EQ(m.rot_time.rows(), 4u);
  EXPECT_EQ(m.periodic_time.rows(), 4u);
  const double bound = 1.0 / 3.0;
  for (int c = 0; c < 4; ++c)
    for (double v : m.entity.component(c)) EXPECT_LE(std::fabs(v), bound);
  EXPECT_EQ(m, ModelParams::initialize(5, 3, 4, 9, 42));
  EXPECT_NE(m, ModelParams::initialize(5, 3, 4, 9, 43));
  const auto off = ModelParams::initialize(5, 3, 4, 9, 42, false);
  for (int c = 0; c < 4; ++c)
    for (double v : off.periodic_time.component(c)) EXPECT_EQ(v, 0.0);
}

TEST(Model, TimeAwareRelationMatchesScalarOracle) {
  const auto m = fixtures::random_model(3, 2, 3, 2, 5);
  const std::vector<RelationId> rels{0, 3, 1};
  const std::vector<TimeId> times{2, 0, 1};
  const auto rot = time_aware_relation(m, rels, times);
  auto no_periodic = m;
  no_periodic.periodic_enabled = false;
  for (std::size_t i = 0; i < rels.size(); ++i)
    for (std::size_t k = 0; k < 2; ++k) expect_batch_near(rot, i, oracle::composite(no_periodic, rels[i], times[i], k), k, 1e-13);
}

TEST(Model, TimeSensitiveRelationMatchesScalarOracle) {
  const auto m = fixtures::random_model(3, 2, 3, 3, 6);
  const std::vector<RelationId> rels{1, 2};
  const std::vector<TimeId> times{0, 2};
  const auto comp = time_sensitive_relation(m, rels, times);
  for (std::size_t i = 0; i < rels.size(); ++i)
    for (std::size_t k = 0; k < 3; ++k) expect_batch_near(comp, i, oracle::composite(m, rels[i], times[i], k), k, 1e-13);
}

TEST(Model, ZeroPeriodicOrDisabledReducesToRotation) {
  auto m = fixtures::random_model(2, 1, 2, 4, 7);
  const std::vector<RelationId> rels{0, 1};
  const std::vector<TimeId> times{1, 0};
  auto off = m;
  off.periodic_enabled = false;
  EXPECT_EQ(time_sensitive_relation(off, rels, times), time_aware_relation(m, rels, times));
  m.periodic_time.fill(0.0);
  EXPECT_EQ(time_sensitive_relation(m, rels, times), time_aware_relation(m, rels, times));
}

TEST(Model, RotationPreservesNormPerCoordinate) {
  const auto m = fixtures::random_model(2, 2, 2, 5, 8);
  const std::vector<RelationId> rels{0, 1, 2, 3};
  const std::vector<TimeId> times{0, 1, 1, 0};
  const auto rot = time_aware_relation(m, rels, times);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(rot.get(i, k).norm(), m.relation.get(rels[i], k).norm(), 1e-13);
}

TEST(Model, AllIdentityScoreIsOne) {
  auto m = ModelParams::initialize(1, 1, 1, 1, 0);
  m.entity.set(0, 0, Quaternion::identity());
  m.relation.set(0, 0, Quaternion::identity());
  m.rot_time.set(0, 0, Quaternion::identity());
  m.periodic_time.fill(0.0);
  const std::vector<Quadruple> q{{0, 0, 0, 0}};
  EXPECT_DOUBLE_EQ(score(m, q).scores[0], 1.0);
}

TEST(Model, ScoreMatchesScalarOracle) {
  for (bool periodic : {true, false}) {
    const auto m = fixtures::random_model(4, 2, 3, 2, 9, periodic);
    const std::vector<Quadruple> batch{{0, 0, 1, 0}, {3, 3, 2, 2}, {1, 1, 1, 1}};
    const auto s = score(m, batch);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto& q = batch[i];
      EXPECT_NEAR(s.scores[i], oracle::phi(m, q.head, q.relation, q.tail, q.time), 1e-12);
    }
  }
}

TEST(Model, CandidateScoresMatchOracle) {
  const auto m = fixtures::random_model(6, 2, 3, 5, 10);
  const std::vector<Query> queries{{0, 0, 0}, {5, 3, 2}, {2, 1, 1}};
  const auto c = score_candidates(m, queries);
  ASSERT_EQ(c.rows, 3u);
  ASSERT_EQ(c.cols, 6u);
  for (std::size_t i = 0; i < queries.size(); ++i)
    for (std::size_t e = 0; e < 6; ++e)
      EXPECT_NEAR(c.row(i)[e], oracle::phi(m, queries[i].entity, queries[i].relation, e, queries[i].time), 1e-12);
  const auto single = score_all_entities(m, queries[1]);
  for (std::size_t e = 0; e < 6; ++e) EXPECT_NEAR(single[e], c.row(1)[e], 1e-12);
}

TEST(Model, ParameterCount) {
  EXPECT_EQ(parameter_count(ModelParams::initialize(2, 1, 1, 3, 0)), 72u);
  EXPECT_EQ(parameter_count(ModelParams::initialize(2, 1, 1, 3, 0, false)), 60u);
  // ICEWS14 shapes at d = 2000
  const std::uint64_t icews = (7128ull + 460 + 730) * 2000 * 4;
  EXPECT_EQ(icews, 66544000u);
}

TEST(Model, ZeroUpstreamGivesZeroGradients) {
  const auto m = fixtures::random_model(3, 2, 2, 3, 11);
  const std::vector<Quadruple> batch{{0, 1, 2, 1}, {2, 2, 0, 0}};
  const auto fwd = score(m, batch);
  const std::vector<double> up(2, 0.0);
  const auto g = score_gradients(m, batch, fwd, up);
  for (const auto* t : {&g.entity, &g.relation, &g.rot_time, &g.periodic_time})
    for (int c = 0; c < 4; ++c)
      for (double v : t->values.component(c)) EXPECT_EQ(v, 0.0);
}

TEST(Model, ScoreGradientsMatchFiniteDifferences) {
  auto m = fixtures::random_model(3, 2, 2, 2, 12);
  const std::vector<Quadruple> batch{{0, 1, 2, 1}, {2, 2, 0, 0}, {1, 0, 1, 1}};
  const std::vector<double> up{0.7, -1.3, 0.4};
  auto objective = [&](const ModelParams& p) {
    double s = 0;
    for (std::size_t i = 0; i < batch.size(); ++i)
      s += up[i] * oracle::phi(p, batch[i].head, batch[i].relation, batch[i].tail, batch[i].time);
    return s;
  };
  const auto g = score_gradients(m, batch, score(m, batch), up);
  const double eps = 1e-6;
  auto check = [&](QuaternionBatch& table, const TableGradient& grad) {
    for (int c = 0; c < 4; ++c)
      for (std::size_t i = 0; i < table.size(); ++i) {
        double& x = table.component(c)[i];
        const double saved = x;
        x = saved + eps;
        const double up_v = objective(m);
        x = saved - eps;
        const double down_v = objective(m);
        x = saved;
        EXPECT_NEAR(grad.values.component(c)[i], (up_v - down_v) / (2 * eps), 1e-7);
      }
  };
  check(m.entity, g.entity);
  check(m.relation, g.relation);
  check(m.rot_time, g.rot_time);
  check(m.periodic_time, g.periodic_time);
}
