#include "mttm/fit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mttm/kernels.hpp"
#include "mttm/truncnorm.hpp"

namespace mttm {

namespace {

constexpr double kLogSqrt2Pi = 0.918938533204672741780329736406;

using Index = Eigen::Index;

Index idx(std::size_t v) { return static_cast<Index>(v); }

void require_beta(double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw std::domain_error("beta must be positive and finite");
}

void require_single_target(const Dataset& data, const Eigen::VectorXd& w) {
  if (data.m() != 1) throw std::invalid_argument("single-target objective needs m == 1");
  if (w.size() != idx(data.d())) throw std::invalid_argument("coefficient length differs from d");
}

// Columns of the design for target k: the other targets' means (unless the
// coupling is frozen) followed by the features.
Eigen::MatrixXd target_design(const Eigen::MatrixXd& ybar, const Eigen::MatrixXd& x, Index k,
                              bool with_targets) {
  const Index m = ybar.rows();
  const Index n = ybar.cols();
  const Index others = with_targets ? m - 1 : 0;
  Eigen::MatrixXd design(n, others + x.cols());
  if (with_targets) {
    Index c = 0;
    for (Index j = 0; j < m; ++j) {
      if (j == k) continue;
      design.col(c++) = ybar.row(j).transpose();
    }
  }
  design.rightCols(x.cols()) = x;
  return design;
}

// Ridge solve (gram + shift I) sol = rhs. With shift == 0 a near-singular
// gram is reported rather than solved.
Eigen::VectorXd ridge_solve(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs, double shift,
                            int sweep) {
  if (gram.rows() == 0) return Eigen::VectorXd();
  Eigen::MatrixXd sys = gram;
  sys.diagonal().array() += shift;
  Eigen::LLT<Eigen::MatrixXd> llt(sys);
  const bool bad = llt.info() != Eigen::Success || (shift == 0.0 && !(llt.rcond() > 1e-13));
  if (bad) {
    std::ostringstream os;
    os << "singular system";
    if (sweep >= 0) os << " at sweep " << sweep;
    throw SingularSystemError(os.str(), sweep);
  }
  return llt.solve(rhs);
}

}  // namespace

// ---------------------------------------------------------------------------
// Objectives
// ---------------------------------------------------------------------------

double eval_L_s(const Eigen::VectorXd& w, double beta, const Dataset& data) {
  require_beta(beta);
  require_single_target(data, w);
  const double sigma = 1.0 / std::sqrt(beta);
  double total = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    const double mean = data.x.row(idx(i)).dot(w);
    const TargetEntry& e = data.y(0, i);
    if (const auto* obs = std::get_if<Observed>(&e)) {
      const double r = obs->value - mean;
      total += 0.5 * std::log(beta) - kLogSqrt2Pi - 0.5 * beta * r * r;
    } else {
      total += tn::log_normalizer(mean, sigma, std::get<Censored>(e).bound);
    }
  }
  return total;
}

double eval_F_s(const Eigen::VectorXd& w, double beta, const VariationalState& q,
                const Dataset& data) {
  require_beta(beta);
  require_single_target(data, w);
  double total = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    const QEntry& e = q(0, i);
    const double r = e.mean - data.x.row(idx(i)).dot(w);
    if (e.censored) total += e.entropy;
    total += 0.5 * std::log(beta) - kLogSqrt2Pi - 0.5 * beta * (r * r + e.variance);
  }
  return total;
}

double regularizer(const ModelParams& params, double lambda_reg) {
  return 0.5 * lambda_reg * (params.a.squaredNorm() + params.w.squaredNorm());
}

double eval_F_m(const ModelParams& params, const VariationalState& q, const Dataset& data,
                double lambda_reg) {
  require_beta(params.beta);
  params.check_dimensions(data);
  const std::size_t m = data.m();
  const double beta = params.beta;
  double total = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (std::size_t k = 0; k < m; ++k) {
      const QEntry& ek = q(k, i);
      if (ek.censored) total += ek.entropy;
      double r = ek.mean - params.w.row(idx(k)).dot(data.x.row(idx(i)));
      double spread = ek.variance;
      for (std::size_t j = 0; j < m; ++j) {
        if (j == k) continue;
        const double a = params.coupling(k, j);
        r -= a * q(j, i).mean;
        spread += a * a * q(j, i).variance;
      }
      total += 0.5 * std::log(beta) - kLogSqrt2Pi - 0.5 * beta * (r * r + spread);
    }
  }
  return total - regularizer(params, lambda_reg);
}

VariationalState sttm_optimal_state(const Eigen::VectorXd& w, double beta, const Dataset& data) {
  require_beta(beta);
  require_single_target(data, w);
  const double sigma = 1.0 / std::sqrt(beta);
  VariationalState q = VariationalState::from_dataset(data, sigma);
  for (std::size_t i = 0; i < data.n(); ++i) {
    if (q(0, i).censored) q.set_truncated_normal(0, i, data.x.row(idx(i)).dot(w), sigma);
  }
  return q;
}

// ---------------------------------------------------------------------------
// Workspace
// ---------------------------------------------------------------------------

AscentWorkspace::AscentWorkspace(const Dataset& data, ModelParams params, VariationalState q,
                                 FitConfig config)
    : data_(&data),
      params_(std::move(params)),
      q_(std::move(q)),
      config_(config),
      hidden_(data.hidden_entries()),
      rng_(config.seed) {
  params_.check_dimensions(data);
  if (q_.rows() != data.m() || q_.cols() != data.n())
    throw std::invalid_argument("variational state does not match dataset dimensions");
  if (config_.fixed_beta) params_.beta = *config_.fixed_beta;
  if (config_.freeze_coupling) params_.a.setZero();
  ybar_ = q_.means();
  var_ = q_.variances();
  refresh_parameter_caches();
}

void AscentWorkspace::refresh_parameter_caches() {
  coupling_ = params_.coupling_matrix();
  resid_.noalias() = coupling_ * ybar_;
  resid_.noalias() -= params_.w * data_->x.transpose();
}

AscentWorkspace AscentWorkspace::initialize(const Dataset& data, const FitConfig& config) {
  const std::size_t m = data.m();
  const std::size_t n = data.n();
  Eigen::MatrixXd filled(idx(m), idx(n));
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const TargetEntry& e = data.y(k, i);
      filled(idx(k), idx(i)) = std::holds_alternative<Observed>(e)
                                   ? std::get<Observed>(e).value
                                   : bound_fill(std::get<Censored>(e).bound);
    }
  }

  ModelParams params = ModelParams::zeros(m, data.d());
  double sq = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const Index ki = idx(k);
    const Eigen::MatrixXd design = target_design(filled, data.x, ki, !config.freeze_coupling);
    const Eigen::VectorXd target = filled.row(ki).transpose();
    Eigen::MatrixXd gram;
    Eigen::VectorXd rhs;
    kernels::parallel::gram(design, target, gram, rhs);
    // lambda_reg == 0 is allowed for the fit itself; the starting regression
    // keeps a tiny ridge so rank-deficient data fails in sweep 1, not here.
    double shift = config.lambda_reg;
    if (shift == 0.0 && gram.rows() > 0) shift = 1e-8 * (1.0 + gram.diagonal().maxCoeff());
    const Eigen::VectorXd sol = ridge_solve(gram, rhs, shift, 0);
    const Index others = config.freeze_coupling ? 0 : idx(m) - 1;
    if (others > 0) params.a.row(ki) = sol.head(others).transpose();
    params.w.row(ki) = sol.tail(idx(data.d())).transpose();
    sq += (target - design * sol).squaredNorm();
  }
  const double msr = std::max(sq / static_cast<double>(m * n), 1e-8);
  params.beta = std::clamp(1.0 / msr, kBetaMin, kBetaMax);
  if (config.fixed_beta) params.beta = *config.fixed_beta;

  const double sigma = 1.0 / std::sqrt(params.beta);
  AscentWorkspace ws(data, std::move(params), VariationalState::from_dataset(data, sigma), config);
  ws.set_sweep(0);
  ws.q_sweep();
  return ws;
}

const QEntry& AscentWorkspace::q_update(std::size_t k, std::size_t i) {
  if (!q_(k, i).censored) throw std::invalid_argument("q_update on an observed entry");
  const Index ki = idx(k);
  const Index ii = idx(i);
  const auto bk = coupling_.col(ki);
  const double nb2 = bk.squaredNorm();
  if (!(nb2 > 0.0) || !std::isfinite(nb2)) {
    std::ostringstream os;
    os << "degenerate q-update for entry (" << k << ", " << i << ")";
    if (sweep_ >= 0) os << " at sweep " << sweep_;
    throw DegenerateUpdateError(os.str(), sweep_);
  }
  const double mu = ybar_(ki, ii) - bk.dot(resid_.col(ii)) / nb2;
  const double sigma = 1.0 / std::sqrt(params_.beta * nb2);
  const QEntry& e = q_.set_truncated_normal(k, i, mu, sigma);
  resid_.col(ii) += bk * (e.mean - ybar_(ki, ii));
  ybar_(ki, ii) = e.mean;
  var_(ki, ii) = e.variance;
  return e;
}

void AscentWorkspace::q_sweep() {
  if (config_.order == SweepOrder::Random) std::shuffle(hidden_.begin(), hidden_.end(), rng_);
  for (const EntryIndex& e : hidden_) q_update(e.k, e.i);
}

const ModelParams& AscentWorkspace::theta_update() {
  const Dataset& data = *data_;
  const Index m = idx(data.m());
  const Index n = idx(data.n());
  const Index d = idx(data.d());
  const bool coupled = !config_.freeze_coupling && m > 1;
  const Index others = coupled ? m - 1 : 0;
  const Eigen::VectorXd var_sums = var_.rowwise().sum();

  // Per-target normal equations. The expected squared residual of target k is
  //   (ybar_k - <wt_k, xbar_k>)^2 + Var_k + sum_{j != k} a_kj^2 Var_j,
  // so the variances of the other targets enter the gram diagonal.
  std::vector<Eigen::MatrixXd> designs(static_cast<std::size_t>(m));
  std::vector<Eigen::MatrixXd> grams(static_cast<std::size_t>(m));
  std::vector<Eigen::VectorXd> rhss(static_cast<std::size_t>(m));
  for (Index k = 0; k < m; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    designs[ku] = target_design(ybar_, data.x, k, coupled);
    kernels::parallel::gram(designs[ku], ybar_.row(k).transpose(), grams[ku], rhss[ku]);
    if (coupled) {
      Index c = 0;
      for (Index j = 0; j < m; ++j)
        if (j != k) grams[ku](c, c) += var_sums(j), ++c;
    }
  }

  auto total_spread = [&](const std::vector<Eigen::VectorXd>& sols) {
    double s = 0.0;
    for (Index k = 0; k < m; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      s += (ybar_.row(k).transpose() - designs[ku] * sols[ku]).squaredNorm() + var_sums(k);
      if (coupled) {
        Index c = 0;
        for (Index j = 0; j < m; ++j)
          if (j != k) s += sols[ku](c) * sols[ku](c) * var_sums(j), ++c;
      }
    }
    return s;
  };

  // The ridge shift is lambda / beta, so coefficients and beta are coupled;
  // alternate exact block maximizations until beta settles. With
  // lambda == 0 or a fixed beta one pass is exact.
  const double lambda = config_.lambda_reg;
  const double count = static_cast<double>(m * n);
  double beta = params_.beta;
  std::vector<Eigen::VectorXd> sols(static_cast<std::size_t>(m));
  bool clamped = false;
  for (int iter = 0; iter < 200; ++iter) {
    for (Index k = 0; k < m; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      sols[ku] = ridge_solve(grams[ku], rhss[ku], lambda / beta, sweep_);
    }
    if (config_.fixed_beta) break;
    const double spread = total_spread(sols);
    double next = spread > 0.0 ? count / spread : kBetaMax;
    clamped = spread <= 0.0 || next < kBetaMin || next > kBetaMax || !std::isfinite(next);
    next = std::clamp(next, kBetaMin, kBetaMax);
    const bool settled = std::abs(next - beta) <= 1e-15 * beta;
    beta = next;
    if (settled || lambda == 0.0) break;
  }

  for (Index k = 0; k < m; ++k) {
    const auto& sol = sols[static_cast<std::size_t>(k)];
    if (others > 0) params_.a.row(k) = sol.head(others).transpose();
    params_.w.row(k) = sol.tail(d).transpose();
  }
  if (!config_.fixed_beta) {
    params_.beta = beta;
    beta_clamped_ = beta_clamped_ || clamped;
  }
  refresh_parameter_caches();
  return params_;
}

double AscentWorkspace::objective() const {
  const double beta = params_.beta;
  const Eigen::VectorXd col_weight = coupling_.colwise().squaredNorm().transpose();
  const double spread = kernels::parallel::expected_sq_residual(resid_, var_, col_weight);
  double entropy = 0.0;
  for (const EntryIndex& e : hidden_) entropy += q_(e.k, e.i).entropy;
  const double count = static_cast<double>(data_->m() * data_->n());
  return entropy + count * (0.5 * std::log(beta) - kLogSqrt2Pi) - 0.5 * beta * spread -
         regularizer(params_, config_.lambda_reg);
}

// ---------------------------------------------------------------------------
// Drivers
// ---------------------------------------------------------------------------

FitResult fit(const Dataset& data, const FitConfig& config) {
  config.validate();
  require_valid(data);
  const auto start = std::chrono::steady_clock::now();

  AscentWorkspace ws = AscentWorkspace::initialize(data, config);
  FitReport report;
  double previous = ws.objective();
  double current = previous;
  for (int sweep = 1; sweep <= config.max_sweeps; ++sweep) {
    ws.set_sweep(sweep);
    ws.q_sweep();
    ws.theta_update();
    current = ws.objective();
    if (!std::isfinite(current)) {
      std::ostringstream os;
      os << "objective became non-finite at sweep " << sweep;
      throw NumericalError(os.str(), sweep);
    }
    if (config.record_trace) report.objective_trace.push_back(current);
    report.sweeps_run = sweep;
    if (std::abs(current - previous) / (1.0 + std::abs(current)) < config.rel_tol) {
      report.converged = true;
      break;
    }
    previous = current;
  }

  report.final_objective = current;
  report.beta_clamped = ws.beta_clamped();
  report.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {ws.params(), ws.state(), std::move(report)};
}

Dataset sttm_design(const Dataset& data, std::size_t target, FillPolicy policy) {
  if (target >= data.m()) throw std::out_of_range("target index out of range");
  const std::size_t m = data.m();
  const std::size_t n = data.n();
  Dataset out;
  out.y = TargetMatrix(1, n);
  out.x.resize(idx(n), idx(m - 1 + data.d()));
  if (!data.target_names.empty()) out.target_names.push_back(data.target_names[target]);
  Index c = 0;
  for (std::size_t j = 0; j < m; ++j) {
    if (j == target) continue;
    for (std::size_t i = 0; i < n; ++i) {
      const TargetEntry& e = data.y(j, i);
      double v = 0.0;
      if (const auto* obs = std::get_if<Observed>(&e)) {
        v = obs->value;
      } else if (policy != FillPolicy::Zero) {
        v = bound_fill(std::get<Censored>(e).bound);
        if (policy == FillPolicy::HalfDetectionLimit) v *= 0.5;
      }
      out.x(idx(i), c) = v;
    }
    out.feature_names.push_back(j < data.target_names.size() ? data.target_names[j]
                                                             : "target" + std::to_string(j));
    ++c;
  }
  out.x.rightCols(idx(data.d())) = data.x;
  for (std::size_t f = 0; f < data.d(); ++f) {
    out.feature_names.push_back(f < data.feature_names.size() ? data.feature_names[f]
                                                              : "x" + std::to_string(f));
  }
  for (std::size_t i = 0; i < n; ++i) out.y(0, i) = data.y(target, i);
  return out;
}

FitResult sttm_fit(const Dataset& data, std::size_t target, FillPolicy policy,
                   const FitConfig& config) {
  return fit(sttm_design(data, target, policy), config);
}

}  // namespace mttm
