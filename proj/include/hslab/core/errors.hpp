#pragma once

#include <stdexcept>
#include <string>

namespace hslab {

/// Malformed input: non-unit normals, overlapping spheres, bad records.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The event loop exceeded its collision budget.
class RunawayDynamics : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Grazing contacts, simultaneous triple contacts, or starting states on a
/// pre-collisional contact. These live on null sets; callers resample.
class DegenerateConfiguration : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DensityTooConcentrated : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IllConditioned : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnreliableOracle : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Query outside the range of stored solution times.
class ExtrapolationError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

}  // namespace hslab
