#include "mttm/kernels.hpp"

namespace mttm::kernels::serial {

double expected_sq_residual(const Eigen::MatrixXd& resid, const Eigen::MatrixXd& var,
                            const Eigen::VectorXd& col_weight) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < resid.cols(); ++i) {
    for (Eigen::Index k = 0; k < resid.rows(); ++k) {
      total += resid(k, i) * resid(k, i) + col_weight(k) * var(k, i);
    }
  }
  return total;
}

void gram(const Eigen::MatrixXd& design, const Eigen::VectorXd& target, Eigen::MatrixXd& gram,
          Eigen::VectorXd& rhs) {
  const Eigen::Index p = design.cols();
  gram.setZero(p, p);
  rhs.setZero(p);
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    for (Eigen::Index r = 0; r < p; ++r) {
      const double xr = design(i, r);
      rhs(r) += xr * target(i);
      for (Eigen::Index c = 0; c <= r; ++c) gram(r, c) += xr * design(i, c);
    }
  }
  for (Eigen::Index r = 0; r < p; ++r)
    for (Eigen::Index c = r + 1; c < p; ++c) gram(r, c) = gram(c, r);
}

}  // namespace mttm::kernels::serial
