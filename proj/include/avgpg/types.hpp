#pragma once

#include <Eigen/Dense>

namespace avgpg {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Deterministic policy: one action index per state.
using ActionTable = Eigen::VectorXi;

} // namespace avgpg
