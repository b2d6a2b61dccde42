#include "mttm/imputation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace mttm {

Eigen::MatrixXd completed_values(const Dataset& data, const VariationalState& q) {
  const auto m = static_cast<Eigen::Index>(data.m());
  const auto n = static_cast<Eigen::Index>(data.n());
  Eigen::MatrixXd out(m, n);
  for (Eigen::Index k = 0; k < m; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const TargetEntry& e = data.y(static_cast<std::size_t>(k), static_cast<std::size_t>(i));
      out(k, i) = std::holds_alternative<Observed>(e)
                      ? std::get<Observed>(e).value
                      : q(static_cast<std::size_t>(k), static_cast<std::size_t>(i)).mean;
    }
  }
  return out;
}

ImputationResult impute(const Dataset& data, const FitConfig& config) {
  FitResult r = fit(data, config);
  ImputationResult out;
  out.completed = completed_values(data, r.q);
  out.params = std::move(r.params);
  out.q = std::move(r.q);
  out.report = std::move(r.report);
  return out;
}

ImputationResult impute_with_model(const ModelParams& params, const Dataset& data, int max_sweeps,
                                   double rel_tol) {
  require_valid(data);
  params.check_dimensions(data);
  const auto start = std::chrono::steady_clock::now();

  FitConfig config;
  config.fixed_beta = params.beta;
  config.lambda_reg = 0.0;
  VariationalState q0 = VariationalState::from_dataset(data, 1.0 / std::sqrt(params.beta));
  AscentWorkspace ws(data, params, std::move(q0), config);

  FitReport report;
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    ws.set_sweep(sweep);
    double moved = 0.0;
    for (const EntryIndex& e : ws.hidden()) {
      const double before = ws.state()(e.k, e.i).mean;
      const double after = ws.q_update(e.k, e.i).mean;
      moved = std::max(moved, std::abs(after - before) / (1.0 + std::abs(after)));
    }
    report.sweeps_run = sweep;
    report.objective_trace.push_back(ws.objective());
    if (moved <= rel_tol) {
      report.converged = true;
      break;
    }
  }
  report.final_objective = ws.objective();
  report.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  ImputationResult out;
  out.completed = completed_values(data, ws.state());
  out.params = params;
  out.q = ws.state();
  out.report = std::move(report);
  return out;
}

Eigen::VectorXd predict(const ModelParams& params, const Eigen::VectorXd& x,
                        const std::vector<std::optional<double>>& known) {
  const std::size_t m = params.m();
  if (known.size() != m) throw std::invalid_argument("known target vector must have length m");
  if (x.size() != static_cast<Eigen::Index>(params.d()))
    throw std::invalid_argument("feature vector must have length d");

  std::vector<Eigen::Index> unknown;
  for (std::size_t k = 0; k < m; ++k)
    if (!known[k]) unknown.push_back(static_cast<Eigen::Index>(k));
  if (unknown.empty()) throw std::invalid_argument("predict needs at least one unknown target");

  const Eigen::MatrixXd c = params.coupling_matrix();
  const Eigen::VectorXd wx = params.w * x;
  const auto u = static_cast<Eigen::Index>(unknown.size());
  Eigen::MatrixXd block(u, u);
  Eigen::VectorXd rhs(u);
  for (Eigen::Index r = 0; r < u; ++r) {
    const Eigen::Index k = unknown[static_cast<std::size_t>(r)];
    rhs(r) = wx(k);
    for (std::size_t j = 0; j < m; ++j)
      if (known[j]) rhs(r) -= c(k, static_cast<Eigen::Index>(j)) * *known[j];
    for (Eigen::Index s = 0; s < u; ++s) block(r, s) = c(k, unknown[static_cast<std::size_t>(s)]);
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu(block);
  if (!lu.isInvertible() || !(lu.rcond() > 1e-13)) {
    throw SingularSystemError("singular system: coupling block over unknown targets is not invertible");
  }
  const Eigen::VectorXd solved = lu.solve(rhs);

  Eigen::VectorXd out(static_cast<Eigen::Index>(m));
  for (std::size_t k = 0; k < m; ++k)
    if (known[k]) out(static_cast<Eigen::Index>(k)) = *known[k];
  for (Eigen::Index r = 0; r < u; ++r) out(unknown[static_cast<std::size_t>(r)]) = solved(r);
  return out;
}

}  // namespace mttm
