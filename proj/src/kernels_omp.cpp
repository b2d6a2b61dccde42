#include <algorithm>
#include <vector>

#include "mttm/kernels.hpp"

namespace mttm::kernels::parallel {

namespace {

Eigen::Index block_count(Eigen::Index n) { return (n + kBlock - 1) / kBlock; }

}  // namespace

double expected_sq_residual(const Eigen::MatrixXd& resid, const Eigen::MatrixXd& var,
                            const Eigen::VectorXd& col_weight) {
  const Eigen::Index n = resid.cols();
  const Eigen::Index blocks = block_count(n);
  std::vector<double> partial(static_cast<std::size_t>(blocks), 0.0);

#pragma omp parallel for schedule(static) if (blocks > 1)
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index begin = b * kBlock;
    const Eigen::Index len = std::min(kBlock, n - begin);
    const auto r = resid.middleCols(begin, len);
    const auto v = var.middleCols(begin, len);
    partial[static_cast<std::size_t>(b)] =
        r.squaredNorm() + (col_weight.transpose() * v).sum();
  }

  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

void gram(const Eigen::MatrixXd& design, const Eigen::VectorXd& target, Eigen::MatrixXd& gram,
          Eigen::VectorXd& rhs) {
  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.cols();
  const Eigen::Index blocks = block_count(n);
  std::vector<Eigen::MatrixXd> part_gram(static_cast<std::size_t>(blocks));
  std::vector<Eigen::VectorXd> part_rhs(static_cast<std::size_t>(blocks));

#pragma omp parallel for schedule(static) if (blocks > 1)
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index begin = b * kBlock;
    const Eigen::Index len = std::min(kBlock, n - begin);
    const auto rows = design.middleRows(begin, len);
    auto& g = part_gram[static_cast<std::size_t>(b)];
    g.setZero(p, p);
    g.selfadjointView<Eigen::Lower>().rankUpdate(rows.transpose());
    part_rhs[static_cast<std::size_t>(b)] = rows.transpose() * target.segment(begin, len);
  }

  gram.setZero(p, p);
  rhs.setZero(p);
  for (Eigen::Index b = 0; b < blocks; ++b) {
    gram += part_gram[static_cast<std::size_t>(b)];
    rhs += part_rhs[static_cast<std::size_t>(b)];
  }
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
}

}  // namespace mttm::kernels::parallel
