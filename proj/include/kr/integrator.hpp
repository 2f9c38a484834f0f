#pragma once

#include <Eigen/Core>

namespace kr {

/// One classical fourth-order Runge-Kutta step of y' = f(t, y).
///
/// `rhs` is any callable `(Scalar t, const Vec& y) -> Vec`; the stage
/// combination stays an Eigen expression until the final assignment.
template <typename Scalar, typename Rhs>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> rk4_step(
    const Rhs& rhs, Scalar t, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& y, Scalar h) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Scalar half = h / Scalar(2);
  const Vec k1 = rhs(t, y);
  const Vec k2 = rhs(t + half, (y + half * k1).eval());
  const Vec k3 = rhs(t + half, (y + half * k2).eval());
  const Vec k4 = rhs(t + h, (y + h * k3).eval());
  return y + (h / Scalar(6)) * (k1 + Scalar(2) * k2 + Scalar(2) * k3 + k4);
}

}  // namespace kr
