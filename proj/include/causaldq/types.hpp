#pragma once

#include <Eigen/Dense>
#include <vector>

namespace causaldq {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Sorted, duplicate-free list of 0-based stream indices.
using IndexSet = std::vector<int>;

}  // namespace causaldq
