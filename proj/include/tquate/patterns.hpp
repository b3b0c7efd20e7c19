#pragma once

// Numerical checks that the scoring function realizes the symmetric,
// asymmetric, inverse, compositional and evolutionary relation patterns.
//
// Each check builds tiny models whose stored relation/time rows realize the
// pattern's hypothesis on the time-sensitive relation q'_r(tau), scores
// through the regular model code, and measures how far the concluded identity
// is from holding. Every check also runs a negative control that violates the
// hypothesis; the control is expected to fail.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace tquate {

struct PatternEntry {
  std::string name;
  bool passed = false;
  bool is_equality = true;     // equality identity vs. asymmetry floor
  double threshold = 0.0;      // tolerance (equalities) or floor (asymmetry)
  double max_deviation = 0.0;  // over all trials
  std::size_t trials = 0;
  std::size_t satisfied = 0;   // trials meeting the criterion
  std::uint64_t seed = 0;
  double control_max_deviation = 0.0;
  std::size_t control_satisfied = 0;
  bool control_rejected = false;  // negative control failed the criterion, as it should
};

struct PatternReport {
  std::vector<PatternEntry> entries;

  bool all_passed() const;
  std::string table() const;
};

/// Fraction of trials that must exceed the asymmetry floor.
inline constexpr double kAsymmetryQuorum = 0.99;
inline constexpr double kAsymmetryFloor = 1e-6;

/// Tolerance for an identity at quaternion dimension `dim`: `base` up to
/// dim 8, growing linearly beyond.
double pattern_tolerance(double base, std::size_t dim);

PatternEntry check_symmetric(std::size_t trials, std::size_t dim, std::uint64_t seed, unsigned threads = 1);
PatternEntry check_asymmetric(std::size_t trials, std::size_t dim, std::uint64_t seed, unsigned threads = 1);
PatternEntry check_inverse(std::size_t trials, std::size_t dim, std::uint64_t seed, unsigned threads = 1);
PatternEntry check_composition(std::size_t trials, std::size_t dim, std::uint64_t seed, unsigned threads = 1);
PatternEntry check_evolution(std::size_t trials, std::size_t dim, std::uint64_t seed, unsigned threads = 1);

PatternReport verify_patterns(std::size_t trials, std::size_t dim, std::uint64_t seed, unsigned threads = 1);

}  // namespace tquate
