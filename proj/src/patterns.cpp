#include "tquate/patterns.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "parallel.hpp"
#include "seeding.hpp"
#include "tquate/model.hpp"

namespace tquate {

namespace {

constexpr double kSymmetricTol = 1e-10;
constexpr double kInverseTol = 1e-10;
constexpr double kCompositionTol = 1e-9;
constexpr double kEvolutionTol = 1e-9;

constexpr EntityId kHead = 0;
constexpr EntityId kTail = 1;

using Rng = std::mt19937_64;

Quaternion random_quat(Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
  return {a, b, c, d};
}

template <typename Fn>
void set_row(QuaternionBatch& table, std::size_t row, Fn&& make) {
  for (std::size_t k = 0; k < table.dim(); ++k) table.set(row, k, make(k));
}

void randomize_row(QuaternionBatch& table, std::size_t row, Rng& rng) {
  set_row(table, row, [&](std::size_t) { return random_quat(rng); });
}

// Two entities, `relations` base relations (plus their unused inverses), two
// timestamps. Everything random; callers overwrite what a hypothesis pins.
ModelParams random_model(std::size_t dim, std::size_t relations, Rng& rng) {
  ModelParams p = ModelParams::initialize(2, relations, 2, dim, 0, true);
  for (QuaternionBatch* t : {&p.entity, &p.relation, &p.rot_time, &p.periodic_time}) {
    for (std::size_t r = 0; r < t->rows(); ++r) randomize_row(*t, r, rng);
  }
  return p;
}

Quaternion unit(const Quaternion& q) {
  const double n = q.norm();
  return n > 0.0 ? (1.0 / n) * q : Quaternion::identity();
}

Quaternion sine(const Quaternion& q) { return {std::sin(q.a), std::sin(q.b), std::sin(q.c), std::sin(q.d)}; }

// Stores in relation row `r` the base embedding whose time-sensitive form at
// timestamp `t` equals `target` (a one-row batch).
void realize_relation(ModelParams& p, RelationId r, TimeId t, const QuaternionBatch& target) {
  set_row(p.relation, r, [&](std::size_t k) {
    const Quaternion u = unit(p.rot_time.get(t, k));
    Quaternion shifted = target.get(0, k);
    if (p.periodic_enabled) shifted = shifted - sine(p.periodic_time.get(t, k));
    return u.conj() * shifted * u;
  });
}

QuaternionBatch composite_of(const ModelParams& p, RelationId r, TimeId t) {
  const RelationId rels[1] = {r};
  const TimeId times[1] = {t};
  return time_sensitive_relation(p, rels, times);
}

double phi(const ModelParams& p, EntityId h, RelationId r, EntityId t, TimeId tau) {
  const Quadruple q[1] = {{h, r, t, tau}};
  return score(p, q).scores[0];
}

QuaternionBatch entity_row(const ModelParams& p, EntityId e) {
  QuaternionBatch out(1, p.dim);
  set_row(out, 0, [&](std::size_t k) { return p.entity.get(e, k); });
  return out;
}

double max_abs_diff(const QuaternionBatch& x, const QuaternionBatch& y) {
  double m = 0.0;
  for (int c = 0; c < 4; ++c) {
    for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::fabs(x.component(c)[i] - y.component(c)[i]));
  }
  return m;
}

struct TrialOutcome {
  double deviation = 0.0;
  double control = 0.0;
};

template <typename TrialFn>
PatternEntry run_check(const char* name, bool is_equality, double threshold, std::size_t trials, std::size_t dim,
                       std::uint64_t seed, unsigned threads, TrialFn&& trial) {
  if (dim == 0) throw std::invalid_argument("pattern checks need dim >= 1");
  std::vector<TrialOutcome> outcomes(trials);
  parallel_for(trials, threads, [&](std::size_t i) {
    Rng rng(mix_seed(seed, i));
    outcomes[i] = trial(rng, dim);
  });

  PatternEntry e;
  e.name = name;
  e.is_equality = is_equality;
  e.threshold = threshold;
  e.trials = trials;
  e.seed = seed;
  auto meets = [&](double dev) { return is_equality ? dev < threshold : dev > threshold; };
  for (const auto& o : outcomes) {
    e.max_deviation = std::max(e.max_deviation, o.deviation);
    e.control_max_deviation = std::max(e.control_max_deviation, o.control);
    e.satisfied += meets(o.deviation);
    e.control_satisfied += meets(o.control);
  }
  auto passes = [&](std::size_t satisfied) {
    if (trials == 0) return false;
    if (is_equality) return satisfied == trials;
    return static_cast<double>(satisfied) >= kAsymmetryQuorum * static_cast<double>(trials);
  };
  e.control_rejected = !passes(e.control_satisfied);
  e.passed = passes(e.satisfied) && e.control_rejected;
  return e;
}

// Real-only base relation, identity rotation, no periodic term: the composite
// relation has zero imaginary part.
void make_real_relation(ModelParams& p, RelationId r, TimeId t, Rng& rng) {
  set_row(p.relation, r, [&](std::size_t) { return Quaternion{random_quat(rng).a, 0.0, 0.0, 0.0}; });
  set_row(p.rot_time, t, [](std::size_t) { return Quaternion::identity(); });
  p.periodic_time.fill(0.0);
}

// Pure-imaginary base relation, identity rotation, no periodic term.
void make_imaginary_relation(ModelParams& p, RelationId r, TimeId t, Rng& rng) {
  set_row(p.relation, r, [&](std::size_t) {
    Quaternion q = random_quat(rng);
    q.a = 0.0;
    return q;
  });
  set_row(p.rot_time, t, [](std::size_t) { return Quaternion::identity(); });
  p.periodic_time.fill(0.0);
}

double swap_deviation(const ModelParams& p, RelationId r, TimeId t) {
  return std::fabs(phi(p, kHead, r, kTail, t) - phi(p, kTail, r, kHead, t));
}

}  // namespace

double pattern_tolerance(double base, std::size_t dim) {
  return base * std::max(1.0, static_cast<double>(dim) / 8.0);
}

bool PatternReport::all_passed() const {
  if (entries.empty()) return false;
  for (const auto& e : entries)
    if (!e.passed) return false;
  return true;
}

std::string PatternReport::table() const {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-12s %-6s %-10s %12s %12s %9s %14s %8s\n", "pattern", "result", "criterion",
                "threshold", "max_dev", "satisfied", "control_maxdev", "control");
  os << buf;
  for (const auto& e : entries) {
    std::snprintf(buf, sizeof(buf), "%-12s %-6s %-10s %12.3e %12.3e %4zu/%-4zu %14.3e %8s\n", e.name.c_str(),
                  e.passed ? "PASS" : "FAIL", e.is_equality ? "dev < tol" : "dev > floor", e.threshold,
                  e.max_deviation, e.satisfied, e.trials, e.control_max_deviation,
                  e.control_rejected ? "rejected" : "PASSED");
    os << buf;
  }
  return os.str();
}

PatternEntry check_symmetric(std::size_t trials, std::size_t dim, std::uint64_t seed, unsigned threads) {
  return run_check("symmetric", true, pattern_tolerance(kSymmetricTol, dim), trials, dim, seed, threads,
                   [](Rng& rng, std::size_t d) {
                     ModelParams p = random_model(d, 1, rng);
                     make_real_relation(p, 0, 0, rng);
                     TrialOutcome out;
                     out.deviation = swap_deviation(p, 0, 0);
                     // Control: inject an imaginary component.
                     set_row(p.relation, 0, [&](std::size_t k) {
                       Quaternion q = p.relation.get(0, k);
                       q.b = random_quat(rng).b;
                       return q;
                     });
                     out.control = swap_deviation(p, 0, 0);
                     return out;
                   });
}

PatternEntry check_asymmetric(std::size_t trials, std::size_t dim, std::uint64_t seed, unsigned threads) {
  return run_check("asymmetric", false, kAsymmetryFloor, trials, dim, seed, threads, [](Rng& rng, std::size_t d) {
    ModelParams p = random_model(d, 1, rng);
    make_imaginary_relation(p, 0, 0, rng);
    TrialOutcome out;
    out.deviation = swap_deviation(p, 0, 0);
    // Control: a real-only relation cannot separate (h, t) from (t, h).
    make_real_relation(p, 0, 0, rng);
    out.control = swap_deviation(p, 0, 0);
    return out;
  });
}

PatternEntry check_inverse(std::size_t trials, std::size_t dim, std::uint64_t seed, unsigned threads) {
  return run_check("inverse", true, pattern_tolerance(kInverseTol, dim), trials, dim, seed, threads,
                   [](Rng& rng, std::size_t d) {
                     ModelParams p = random_model(d, 2, rng);
                     realize_relation(p, 1, 0, conjugate(composite_of(p, 0, 0)));
                     TrialOutcome out;
                     out.deviation = std::fabs(phi(p, kHead, 0, kTail, 0) - phi(p, kTail, 1, kHead, 0));
                     // Control: an unrelated second relation.
                     randomize_row(p.relation, 1, rng);
                     out.control = std::fabs(phi(p, kHead, 0, kTail, 0) - phi(p, kTail, 1, kHead, 0));
                     return out;
                   });
}

PatternEntry check_composition(std::size_t trials, std::size_t dim, std::uint64_t seed, unsigned threads) {
  return run_check("composition", true, pattern_tolerance(kCompositionTol, dim), trials, dim, seed, threads,
                   [](Rng& rng, std::size_t d) {
                     // Relations 1 and 2 are free; relation 0 is their composition.
                     ModelParams p = random_model(d, 3, rng);
                     const QuaternionBatch r2 = composite_of(p, 1, 0);
                     const QuaternionBatch r3 = composite_of(p, 2, 0);
                     const QuaternionBatch head = entity_row(p, kHead);
                     const QuaternionBatch tail = entity_row(p, kTail);
                     const double chained = inner_product(hamilton_product(hamilton_product(head, r2), r3), tail)[0];

                     TrialOutcome out;
                     realize_relation(p, 0, 0, hamilton_product(r2, r3));
                     out.deviation = std::fabs(chained - phi(p, kHead, 0, kTail, 0));
                     // Control: composing in the opposite order.
                     realize_relation(p, 0, 0, hamilton_product(r3, r2));
                     out.control = std::fabs(chained - phi(p, kHead, 0, kTail, 0));
                     return out;
                   });
}

PatternEntry check_evolution(std::size_t trials, std::size_t dim, std::uint64_t seed, unsigned threads) {
  return run_check("evolution", true, pattern_tolerance(kEvolutionTol, dim), trials, dim, seed, threads,
                   [](Rng& rng, std::size_t d) {
                     // Relation 0 holds at timestamp 0, relation 1 at timestamp 1.
                     ModelParams p = random_model(d, 2, rng);
                     p.periodic_time.fill(0.0);
                     set_row(p.relation, 1, [&](std::size_t k) {
                       const Quaternion w = unit(p.rot_time.get(1, k)).conj() * unit(p.rot_time.get(0, k));
                       return w * p.relation.get(0, k) * w.conj();
                     });
                     auto deviation = [&] {
                       const double rel = max_abs_diff(composite_of(p, 0, 0), composite_of(p, 1, 1));
                       const double sc = std::fabs(phi(p, kHead, 0, kTail, 0) - phi(p, kHead, 1, kTail, 1));
                       return std::max(rel, sc);
                     };
                     TrialOutcome out;
                     out.deviation = deviation();
                     // Control: non-zero periodic terms break the construction.
                     randomize_row(p.periodic_time, 0, rng);
                     randomize_row(p.periodic_time, 1, rng);
                     out.control = deviation();
                     return out;
                   });
}

PatternReport verify_patterns(std::size_t trials, std::size_t dim, std::uint64_t seed, unsigned threads) {
  PatternReport report;
  report.entries.push_back(check_symmetric(trials, dim, seed, threads));
  report.entries.push_back(check_asymmetric(trials, dim, seed, threads));
  report.entries.push_back(check_inverse(trials, dim, seed, threads));
  report.entries.push_back(check_composition(trials, dim, seed, threads));
  report.entries.push_back(check_evolution(trials, dim, seed, threads));
  return report;
}

}  // namespace tquate
