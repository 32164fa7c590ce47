#pragma once

#include <cstddef>

namespace hslab {

/// Numerical tolerances for the hard-sphere event machinery. The defaults
/// excise measure-zero sets (grazing, triple contacts) and nothing else.
struct Tolerances {
  double overlap = 1e-12;  ///< relative to the diameter
  double unit = 1e-12;     ///< | |omega| - 1 |
  double graze = 1e-12;    ///< discriminant relative to b^2 in the contact quadratic
  double tie = 1e-12;      ///< absolute time window for simultaneous events
  std::size_t max_events = 1'000'000;
};

}  // namespace hslab
