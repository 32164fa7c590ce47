#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "hslab/core/errors.hpp"

namespace hslab {

/// Central-difference Jacobian of a map R^n -> R^m at `x` with step h.
template <typename Map>
Eigen::MatrixXd central_jacobian(Map&& f, const std::vector<double>& x, double h) {
  const std::vector<double> f0 = f(x);
  Eigen::MatrixXd jac(static_cast<Eigen::Index>(f0.size()), static_cast<Eigen::Index>(x.size()));
  std::vector<double> xp = x;
  for (std::size_t c = 0; c < x.size(); ++c) {
    xp[c] = x[c] + h;
    const std::vector<double> fp = f(xp);
    xp[c] = x[c] - h;
    const std::vector<double> fm = f(xp);
    xp[c] = x[c];
    if (fp.size() != f0.size() || fm.size() != f0.size())
      throw IllConditioned("map changed output dimension under perturbation");
    for (std::size_t r = 0; r < f0.size(); ++r)
      jac(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = (fp[r] - fm[r]) / (2.0 * h);
  }
  return jac;
}

inline double determinant(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw InvalidArgument("determinant of a non-square matrix");
  return m.partialPivLu().determinant();
}

/// |det| from central differences at two steps, with a Richardson-style
/// consistency check between them.
struct DeterminantEstimate {
  double coarse = 0.0;  ///< step h1
  double fine = 0.0;    ///< step h2
  double consistency = 0.0;  ///< |coarse - fine| / |fine|
};

template <typename Map>
DeterminantEstimate fd_abs_determinant(Map&& f, const std::vector<double>& x, double h1,
                                       double h2) {
  DeterminantEstimate d;
  d.coarse = std::abs(determinant(central_jacobian(f, x, h1)));
  d.fine = std::abs(determinant(central_jacobian(f, x, h2)));
  d.consistency = std::abs(d.coarse - d.fine) / std::max(std::abs(d.fine), 1e-300);
  return d;
}

}  // namespace hslab
