#pragma once

#include "hslab/experiments/probes.hpp"

namespace hslab::testing {

using hslab::coordinate_norm;
using hslab::max_abs_diff;
using hslab::random_cluster;

}  // namespace hslab::testing
