#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <type_traits>
#include <utility>
#include <vector>

#include "hslab/core/flow.hpp"
#include "hslab/dual/observable.hpp"

namespace hslab {

namespace detail {

struct EvalCounter {
  std::size_t events = 0;
  std::size_t cap = 1'000'000;
  void add(std::size_t n) {
    events += n;
    if (events > cap) throw RunawayDynamics("collision cap exceeded in the dual recursion");
  }
};

/// The four reduced configurations met at a collision: the contact state with
/// incoming velocities and with outgoing velocities, each minus i or minus j.
struct ReducedStates {
  Configuration in_i, in_j, out_i, out_j;
};

inline ReducedStates reduce_at(const CollisionEvent& ev, const Configuration& contact) {
  Configuration out = contact;
  out.v[ev.i] = ev.post.first;
  out.v[ev.j] = ev.post.second;
  return {without(contact, ev.i), without(contact, ev.j), without(out, ev.i), without(out, ev.j)};
}

/// Forward characteristic of Z over [0, t] with contact snapshots.
inline FlowResult characteristic(const Configuration& z, double t, bool snapshots) {
  FlowOptions opt;
  opt.snapshots = snapshots;
  opt.validate_input = false;
  return flow(z, t, opt);
}

template <typename S>
S leaf_value(const LevelFunction& f, const Configuration& z, std::size_t N) {
  if constexpr (std::is_same_v<S, BigInt>) {
    return exact_value(f, z, N);
  } else {
    return value(f, z, N);
  }
}

template <typename S>
S to_scalar(std::size_t n) {
  return S(n);
}

/// phi^{(s)}(t, Z) = phi^{(s)}(0, psi^t Z) + sum over collisions at time tau of
/// (N-s+1) [phi^{(s-1)}(t-tau, out_i) + phi^{(s-1)}(t-tau, out_j) -/+ (in_i + in_j)],
/// with the minus sign for the dual hierarchy and plus for the hat hierarchy.
template <typename S>
S evaluate_rec(const ObservableSpec& sp, bool all_plus, double t, const Configuration& z,
               EvalCounter& counter, JumpLedger* ledger) {
  const std::size_t s = z.count();
  if (s == 0 || s < sp.lowest_level()) return S(0);
  const LevelFunction* f = sp.at(s);
  const bool jumps = s >= 2 && s - 1 >= sp.lowest_level();
  if (t == 0.0) return f ? leaf_value<S>(*f, z, sp.N) : S(0);
  if (!jumps && !f) return S(0);
  const FlowResult r = characteristic(z, t, jumps);
  counter.add(r.events.size());
  S val = f ? leaf_value<S>(*f, r.final, sp.N) : S(0);
  if (ledger) {
    if constexpr (std::is_same_v<S, BigInt>) {
      ledger->exact_base = val;
      ledger->base = val.template convert_to<double>();
    } else {
      ledger->base = val;
    }
  }
  if (!jumps) return val;
  const S mult = to_scalar<S>(sp.N - s + 1);
  for (std::size_t k = 0; k < r.events.size(); ++k) {
    const CollisionEvent& ev = r.events[k];
    const ReducedStates red = reduce_at(ev, r.snapshots[k]);
    const double rem = t - ev.time;
    const S out = evaluate_rec<S>(sp, all_plus, rem, red.out_i, counter, nullptr) +
                  evaluate_rec<S>(sp, all_plus, rem, red.out_j, counter, nullptr);
    const S in = evaluate_rec<S>(sp, all_plus, rem, red.in_i, counter, nullptr) +
                 evaluate_rec<S>(sp, all_plus, rem, red.in_j, counter, nullptr);
    const S jump = mult * (all_plus ? S(out + in) : S(out - in));
    val += jump;
    if (ledger) {
      JumpRecord rec;
      rec.level = s;
      rec.time = ev.time;
      rec.i = ev.i;
      rec.j = ev.j;
      rec.multiplicity = sp.N - s + 1;
      if constexpr (std::is_same_v<S, BigInt>) {
        rec.exact_contribution = jump;
        rec.contribution = jump.template convert_to<double>();
      } else {
        rec.contribution = jump;
      }
      ledger->jumps.push_back(std::move(rec));
    }
  }
  return val;
}

/// Same recursion with unit multiplicities, split by the level the data came
/// from: entry l is the integer c_l in value = sum_l c_l prod_{l<k<=s}(N-k+1).
inline std::vector<BigInt> coefficient_rec(const ObservableSpec& sp, bool all_plus, double t,
                                           const Configuration& z, std::size_t width,
                                           EvalCounter& counter) {
  std::vector<BigInt> c(width, 0);
  const std::size_t s = z.count();
  if (s == 0 || s < sp.lowest_level()) return c;
  const LevelFunction* f = sp.at(s);
  const bool jumps = s >= 2 && s - 1 >= sp.lowest_level();
  if (t == 0.0) {
    if (f) c[s] = exact_value(*f, z, sp.N);
    return c;
  }
  const FlowResult r = characteristic(z, t, jumps);
  counter.add(r.events.size());
  if (f) c[s] = exact_value(*f, r.final, sp.N);
  if (!jumps) return c;
  for (std::size_t k = 0; k < r.events.size(); ++k) {
    const CollisionEvent& ev = r.events[k];
    const ReducedStates red = reduce_at(ev, r.snapshots[k]);
    const double rem = t - ev.time;
    const auto oi = coefficient_rec(sp, all_plus, rem, red.out_i, width, counter);
    const auto oj = coefficient_rec(sp, all_plus, rem, red.out_j, width, counter);
    const auto ii = coefficient_rec(sp, all_plus, rem, red.in_i, width, counter);
    const auto ij = coefficient_rec(sp, all_plus, rem, red.in_j, width, counter);
    for (std::size_t l = 0; l < width; ++l) {
      if (all_plus)
        c[l] += oi[l] + oj[l] + ii[l] + ij[l];
      else
        c[l] += oi[l] + oj[l] - ii[l] - ij[l];
    }
  }
  return c;
}

/// Upper and lower envelopes evaluated together; they are coupled through
/// their jump relations.
inline std::pair<double, double> envelope_rec(const ObservableSpec& sp, double t,
                                              const Configuration& z, EvalCounter& counter) {
  const std::size_t s = z.count();
  auto level = [](const std::map<std::size_t, LevelFunction>& m, std::size_t n) {
    auto it = m.find(n);
    return it == m.end() ? nullptr : &it->second;
  };
  const LevelFunction* fu = level(sp.levels, s);
  const LevelFunction* fl = level(sp.partner, s);
  if (s == 0) return {0.0, 0.0};
  if (t == 0.0) return {fu ? value(*fu, z, sp.N) : 0.0, fl ? value(*fl, z, sp.N) : 0.0};
  const bool jumps = s >= 2;
  const FlowResult r = characteristic(z, t, jumps);
  counter.add(r.events.size());
  double up = fu ? value(*fu, r.final, sp.N) : 0.0;
  double lo = fl ? value(*fl, r.final, sp.N) : 0.0;
  if (!jumps) return {up, lo};
  const double mult = static_cast<double>(sp.N - s + 1);
  for (std::size_t k = 0; k < r.events.size(); ++k) {
    const CollisionEvent& ev = r.events[k];
    const ReducedStates red = reduce_at(ev, r.snapshots[k]);
    const double rem = t - ev.time;
    const auto oi = envelope_rec(sp, rem, red.out_i, counter);
    const auto oj = envelope_rec(sp, rem, red.out_j, counter);
    const auto ii = envelope_rec(sp, rem, red.in_i, counter);
    const auto ij = envelope_rec(sp, rem, red.in_j, counter);
    up += mult * (oi.first + oj.first - ii.second - ij.second);
    lo += mult * (oi.second + oj.second - ii.first - ij.first);
  }
  return {up, lo};
}

inline bool hat_nonzero_rec(std::size_t j, double t, const Configuration& z, EvalCounter& counter) {
  const std::size_t s = z.count();
  if (s < j) return false;
  if (s == j) return true;
  if (t == 0.0) return false;
  const FlowResult r = characteristic(z, t, true);
  counter.add(r.events.size());
  for (std::size_t k = 0; k < r.events.size(); ++k) {
    const ReducedStates red = reduce_at(r.events[k], r.snapshots[k]);
    const double rem = t - r.events[k].time;
    if (hat_nonzero_rec(j, rem, red.in_i, counter) || hat_nonzero_rec(j, rem, red.in_j, counter) ||
        hat_nonzero_rec(j, rem, red.out_i, counter) || hat_nonzero_rec(j, rem, red.out_j, counter))
      return true;
  }
  return false;
}

inline void check_probe(const ObservableSpec& sp, double t, const Configuration& z) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("evaluation time must be finite and >= 0");
  if (z.count() > sp.level_cap) throw InvalidArgument("particle count exceeds the level cap");
  if (sp.N < z.count()) throw InvalidArgument("N must be at least the particle count");
  validate(z);
}

}  // namespace detail

/// phi_N^{(s)}(t, Z) for the dual hierarchy (signed jumps) in floating point.
inline double evaluate_dual(const ObservableSpec& sp, double t, const Configuration& z,
                            JumpLedger* ledger = nullptr) {
  detail::check_probe(sp, t, z);
  detail::EvalCounter c{0, sp.collision_cap};
  const double v = detail::evaluate_rec<double>(sp, false, t, z, c, ledger);
  if (ledger) ledger->total_events = c.events;
  return v;
}

/// Exact value for integer-valued data; `all_plus` selects the hat rule.
inline BigInt evaluate_exact(const ObservableSpec& sp, double t, const Configuration& z,
                             JumpLedger* ledger = nullptr) {
  detail::check_probe(sp, t, z);
  if (!sp.exact()) throw InvalidArgument("exact evaluation needs integer-valued data");
  const bool all_plus = sp.hierarchy == Hierarchy::hat;
  detail::EvalCounter c{0, sp.collision_cap};
  BigInt v = detail::evaluate_rec<BigInt>(sp, all_plus, t, z, c, ledger);
  if (ledger) {
    ledger->total_events = c.events;
    detail::EvalCounter c2{0, sp.collision_cap};
    ledger->coefficients = detail::coefficient_rec(sp, all_plus, t, z, z.count() + 1, c2);
  }
  return v;
}

/// Per-source-level integer coefficients (unit multiplicities).
inline std::vector<BigInt> level_coefficients(const ObservableSpec& sp, double t,
                                              const Configuration& z) {
  detail::check_probe(sp, t, z);
  detail::EvalCounter c{0, sp.collision_cap};
  return detail::coefficient_rec(sp, sp.hierarchy == Hierarchy::hat, t, z, z.count() + 1, c);
}

/// prod_{l < k <= s} (N - k + 1).
inline BigInt falling_product(std::size_t N, std::size_t l, std::size_t s) {
  BigInt p = 1;
  for (std::size_t k = l + 1; k <= s; ++k) p *= BigInt(N - k + 1);
  return p;
}

/// Recombines level coefficients into a value: sum_l c_l prod_{l<k<=s}(N-k+1).
inline BigInt recombine(const std::vector<BigInt>& c, std::size_t N, std::size_t s) {
  BigInt v = 0;
  for (std::size_t l = 0; l < c.size() && l <= s; ++l)
    if (c[l] != 0) v += c[l] * falling_product(N, l, s);
  return v;
}

/// (upper, lower) envelopes: spec.levels carries the upper data, spec.partner
/// the lower data.
inline std::pair<double, double> evaluate_envelopes(const ObservableSpec& sp, double t,
                                                    const Configuration& z) {
  detail::check_probe(sp, t, z);
  detail::EvalCounter c{0, sp.collision_cap};
  return detail::envelope_rec(sp, t, z, c);
}

/// Dispatch on spec.hierarchy, returning a double.
inline double evaluate(const ObservableSpec& sp, double t, const Configuration& z,
                       JumpLedger* ledger = nullptr) {
  switch (sp.hierarchy) {
    case Hierarchy::dual:
      return evaluate_dual(sp, t, z, ledger);
    case Hierarchy::hat: {
      if (sp.exact()) return evaluate_exact(sp, t, z, ledger).convert_to<double>();
      detail::check_probe(sp, t, z);
      detail::EvalCounter c{0, sp.collision_cap};
      return detail::evaluate_rec<double>(sp, true, t, z, c, ledger);
    }
    case Hierarchy::upper_envelope: return evaluate_envelopes(sp, t, z).first;
    case Hierarchy::lower_envelope: return evaluate_envelopes(sp, t, z).second;
  }
  return 0.0;
}

/// hat phi_{N,j}^{(s)}(t, Z) with s = Z.count(), exactly.
inline BigInt evaluate_hat(std::size_t j, std::size_t N, double t, const Configuration& z,
                           JumpLedger* ledger = nullptr) {
  if (j == 0) throw InvalidArgument("hat level j must be >= 1");
  const std::size_t s = z.count();
  if (s < j) return 0;
  return evaluate_exact(hat_spec(j, N, std::max<std::size_t>(s, 5)), t, z, ledger);
}

/// Whether hat phi_{N,j}^{(s)}(t, Z) != 0, decided by a short-circuit search.
inline bool hat_nonzero(std::size_t j, double t, const Configuration& z,
                        std::size_t collision_cap = 1'000'000) {
  if (!(t >= 0.0)) throw InvalidArgument("time must be >= 0");
  detail::EvalCounter c{0, collision_cap};
  return detail::hat_nonzero_rec(j, t, z, c);
}

/// Membership in W_s^k(T), s = Z.count().
inline bool singular_membership(const Configuration& z, std::size_t k, double T, std::size_t N) {
  const std::size_t s = z.count();
  if (k >= s) throw InvalidArgument("need 0 <= k < s");
  if (N < s) throw InvalidArgument("N must be at least s");
  if (k == 0) return true;
  return hat_nonzero(s - k, T, z);
}

/// log of prod_{j<k<=s} 4 (N-k+1) (32 k^{3/2})^{k^2}.
inline double log_collision_bound(std::size_t j, std::size_t s, std::size_t N) {
  double b = 0.0;
  for (std::size_t k = j + 1; k <= s; ++k) {
    const double kk = static_cast<double>(k);
    b += std::log(4.0) + std::log(static_cast<double>(N - k + 1)) +
         kk * kk * std::log(32.0 * std::pow(kk, 1.5));
  }
  return b;
}

/// log of prod_{j<k<=s} 4 (32 k^{3/2})^{k^2}, the comparability ratio bound.
inline double log_comparability_bound(std::size_t j, std::size_t s) {
  double b = 0.0;
  for (std::size_t k = j + 1; k <= s; ++k) {
    const double kk = static_cast<double>(k);
    b += std::log(4.0) + kk * kk * std::log(32.0 * std::pow(kk, 1.5));
  }
  return b;
}

inline double log_of(const BigInt& v) {
  if (v <= 0) return -INFINITY;
  // msb keeps this finite for values beyond double range
  const std::size_t bits = boost::multiprecision::msb(v);
  if (bits < 1000) return std::log(v.convert_to<double>());
  const BigInt top = v >> (bits - 60);
  return std::log(top.convert_to<double>()) + static_cast<double>(bits - 60) * std::log(2.0);
}

}  // namespace hslab
