#pragma once

#include <string>

#include "hslab/core/configuration.hpp"
#include "json.hpp"

namespace hslab {

/// Verdict of one acceptance predicate plus a one-line summary.
struct CheckOutcome {
  bool pass = false;
  std::string summary;
};

inline std::string csv_num(double a) { return detail::format_double(a); }

inline void merge(CheckOutcome& into, const CheckOutcome& part) {
  into.pass = into.pass && part.pass;
  into.summary += (into.summary.empty() ? "" : "; ") + part.summary;
}

}  // namespace hslab
