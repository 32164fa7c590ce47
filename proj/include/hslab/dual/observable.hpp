#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hslab/core/configuration.hpp"
#include "hslab/core/errors.hpp"

namespace hslab {

using BigInt = boost::multiprecision::cpp_int;

/// Initial datum of one level. Integer-valued kinds (constant, indicator,
/// scaled_indicator) can be evaluated exactly; `function` is floating only.
struct LevelFunction {
  enum class Kind { constant, indicator, scaled_indicator, function };

  Kind kind = Kind::constant;
  std::int64_t coefficient = 1;
  unsigned n_power = 0;  ///< scaled_indicator carries N^n_power
  std::function<bool(const Configuration&)> member;
  std::function<double(const Configuration&)> fn;

  static LevelFunction constant(std::int64_t c) {
    LevelFunction f;
    f.kind = Kind::constant;
    f.coefficient = c;
    return f;
  }
  static LevelFunction indicator(std::function<bool(const Configuration&)> m, std::int64_t c = 1) {
    LevelFunction f;
    f.kind = Kind::indicator;
    f.member = std::move(m);
    f.coefficient = c;
    return f;
  }
  static LevelFunction scaled_indicator(std::function<bool(const Configuration&)> m, unsigned k) {
    LevelFunction f;
    f.kind = Kind::scaled_indicator;
    f.member = std::move(m);
    f.n_power = k;
    return f;
  }
  static LevelFunction function(std::function<double(const Configuration&)> g) {
    LevelFunction f;
    f.kind = Kind::function;
    f.fn = std::move(g);
    return f;
  }

  bool exact() const { return kind != Kind::function; }
};

inline BigInt power(std::size_t N, unsigned k) {
  BigInt r = 1;
  for (unsigned a = 0; a < k; ++a) r *= N;
  return r;
}

inline BigInt exact_value(const LevelFunction& f, const Configuration& z, std::size_t N) {
  switch (f.kind) {
    case LevelFunction::Kind::constant: return BigInt(f.coefficient);
    case LevelFunction::Kind::indicator: return f.member(z) ? BigInt(f.coefficient) : BigInt(0);
    case LevelFunction::Kind::scaled_indicator: return f.member(z) ? power(N, f.n_power) : BigInt(0);
    case LevelFunction::Kind::function: break;
  }
  throw InvalidArgument("level function has no exact value");
}

inline double value(const LevelFunction& f, const Configuration& z, std::size_t N) {
  if (f.kind == LevelFunction::Kind::function) return f.fn(z);
  return exact_value(f, z, N).convert_to<double>();
}

enum class Hierarchy { dual, hat, upper_envelope, lower_envelope };

inline std::string to_string(Hierarchy h) {
  switch (h) {
    case Hierarchy::dual: return "dual";
    case Hierarchy::hat: return "hat";
    case Hierarchy::upper_envelope: return "upper";
    case Hierarchy::lower_envelope: return "lower";
  }
  return "?";
}

/// Level-indexed initial data; absent levels are identically zero. For the
/// envelope hierarchies `partner` holds the data of the opposite envelope.
struct ObservableSpec {
  std::size_t N = 0;
  Hierarchy hierarchy = Hierarchy::dual;
  std::map<std::size_t, LevelFunction> levels;
  std::map<std::size_t, LevelFunction> partner;
  std::size_t level_cap = 5;
  std::size_t collision_cap = 1'000'000;

  const LevelFunction* at(std::size_t s) const {
    auto it = levels.find(s);
    return it == levels.end() ? nullptr : &it->second;
  }
  std::size_t lowest_level() const { return levels.empty() ? SIZE_MAX : levels.begin()->first; }
  bool exact() const {
    for (const auto& [s, f] : levels)
      if (!f.exact()) return false;
    return true;
  }
};

/// Data 1_{D_s} at every level s in [1, cap]: the trivially conserved observable.
inline ObservableSpec all_ones_spec(std::size_t N, std::size_t cap, Hierarchy h = Hierarchy::dual) {
  ObservableSpec sp;
  sp.N = N;
  sp.hierarchy = h;
  sp.level_cap = cap;
  for (std::size_t s = 1; s <= cap; ++s) sp.levels.emplace(s, LevelFunction::constant(1));
  return sp;
}

/// The hat data 1_{D_j} at level j only.
inline ObservableSpec hat_spec(std::size_t j, std::size_t N, std::size_t cap = 5) {
  ObservableSpec sp;
  sp.N = N;
  sp.hierarchy = Hierarchy::hat;
  sp.level_cap = std::max(cap, j);
  sp.levels.emplace(j, LevelFunction::constant(1));
  return sp;
}

/// Number of (level, probe, permutation) triples where a level's datum changes
/// under reindexing; zero for admissible data.
inline std::size_t symmetry_violations(const ObservableSpec& sp,
                                       const std::vector<Configuration>& probes,
                                       double tol = 0.0) {
  std::size_t bad = 0;
  for (const auto& z : probes) {
    auto it = sp.levels.find(z.count());
    if (it == sp.levels.end()) continue;
    std::vector<std::size_t> sigma(z.count());
    for (std::size_t i = 0; i < sigma.size(); ++i) sigma[i] = i;
    const double base = value(it->second, z, sp.N);
    while (std::next_permutation(sigma.begin(), sigma.end()))
      if (std::abs(value(it->second, permuted(z, sigma), sp.N) - base) > tol) ++bad;
  }
  return bad;
}

struct JumpRecord {
  std::size_t level = 0;
  double time = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t multiplicity = 0;  ///< N - s + 1
  double contribution = 0.0;
  BigInt exact_contribution = 0;
};

/// Top-level jump bookkeeping of one evaluation. `coefficients[l]` is the
/// integer c_l with value = sum_l c_l prod_{l<k<=s} (N-k+1), filled for
/// exact hierarchies.
struct JumpLedger {
  double base = 0.0;
  BigInt exact_base = 0;
  std::vector<JumpRecord> jumps;
  std::size_t total_events = 0;  ///< over the whole recursion
  std::vector<BigInt> coefficients;
  std::size_t resamples = 0;
};

}  // namespace hslab
