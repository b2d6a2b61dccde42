#pragma once

// Data-parallel inner loops of the fitter. `serial` is the straightforward
// reference; `parallel` splits the example axis into fixed-size blocks, runs
// the blocks under OpenMP and reduces the partial results in block order, so
// its output does not depend on the thread count.

#include <Eigen/Dense>

namespace mttm::kernels {

/// Examples per block in the parallel kernels.
inline constexpr Eigen::Index kBlock = 128;

namespace serial {

/// sum_i ( ||resid.col(i)||^2 + sum_j col_weight(j) * var(j, i) )
double expected_sq_residual(const Eigen::MatrixXd& resid, const Eigen::MatrixXd& var,
                            const Eigen::VectorXd& col_weight);

/// gram = design^T design, rhs = design^T target.
void gram(const Eigen::MatrixXd& design, const Eigen::VectorXd& target, Eigen::MatrixXd& gram,
          Eigen::VectorXd& rhs);

}  // namespace serial

namespace parallel {

double expected_sq_residual(const Eigen::MatrixXd& resid, const Eigen::MatrixXd& var,
                            const Eigen::VectorXd& col_weight);

void gram(const Eigen::MatrixXd& design, const Eigen::VectorXd& target, Eigen::MatrixXd& gram,
          Eigen::VectorXd& rhs);

}  // namespace parallel

}  // namespace mttm::kernels
