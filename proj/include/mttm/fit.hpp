#pragma once

// Objectives and block coordinate ascent for the multi-target Tobit model.
//
// The surrogate objective is
//   F_m(theta, q) = sum_{hidden} H[q_ki]
//                 + sum_{i,k} E_q[ log N(t_ki; <a_k, t_{\k,i}> + <w_k, x_i>, 1/beta) ]
//                 - lambda/2 * sum_k (||a_k||^2 + ||w_k||^2)
// with q a product of per-entry densities. Maximizing over one censored q_ki
// gives a truncated normal; maximizing over theta with q fixed is a ridge
// system per target plus a scalar update of beta.

#include <cstdint>
#include <random>
#include <vector>

#include "mttm/core.hpp"

namespace mttm {

// ---------------------------------------------------------------------------
// Objective evaluation
// ---------------------------------------------------------------------------

/// Censored-data log-likelihood of a single-target model (data.m() == 1).
double eval_L_s(const Eigen::VectorXd& w, double beta, const Dataset& data);

/// Single-target surrogate objective (no regularizer).
double eval_F_s(const Eigen::VectorXd& w, double beta, const VariationalState& q,
                const Dataset& data);

/// Full regularized multi-target objective.
double eval_F_m(const ModelParams& params, const VariationalState& q, const Dataset& data,
                double lambda_reg);

/// lambda/2 * sum_k (||a_k||^2 + ||w_k||^2)
double regularizer(const ModelParams& params, double lambda_reg);

/// The state maximizing F_s for fixed (w, beta): every censored entry gets
/// TN(<w, x_i>, beta^{-1/2}, window).
VariationalState sttm_optimal_state(const Eigen::VectorXd& w, double beta, const Dataset& data);

// ---------------------------------------------------------------------------
// Workspace
// ---------------------------------------------------------------------------

/// Mutable fitting state. Holds a pointer to the dataset, which must outlive
/// the workspace.
class AscentWorkspace {
 public:
  AscentWorkspace(const Dataset& data, ModelParams params, VariationalState q, FitConfig config);

  /// Default starting point: censored cells at bound_fill, a ridge regression
  /// per target on the filled table, beta from the residual, then one q sweep.
  static AscentWorkspace initialize(const Dataset& data, const FitConfig& config);

  /// Closed-form maximization of F_m over q_ki, everything else fixed.
  const QEntry& q_update(std::size_t k, std::size_t i);

  /// One pass of q_update over every hidden entry in the configured order.
  void q_sweep();

  /// Closed-form maximization of F_m over (a, w, beta), q fixed.
  const ModelParams& theta_update();

  /// Current F_m, from the cached residuals.
  double objective() const;

  const Dataset& data() const { return *data_; }
  const ModelParams& params() const { return params_; }
  const VariationalState& state() const { return q_; }
  const FitConfig& config() const { return config_; }
  const Eigen::MatrixXd& coupling() const { return coupling_; }
  const std::vector<EntryIndex>& hidden() const { return hidden_; }
  bool beta_clamped() const { return beta_clamped_; }

  /// Sweep index attached to errors raised by later updates.
  void set_sweep(int sweep) { sweep_ = sweep; }

 private:
  void refresh_parameter_caches();

  const Dataset* data_;
  ModelParams params_;
  VariationalState q_;
  FitConfig config_;

  Eigen::MatrixXd coupling_;  // m x m, unit diagonal
  Eigen::MatrixXd ybar_;      // m x n means of q
  Eigen::MatrixXd var_;       // m x n variances of q
  Eigen::MatrixXd resid_;     // m x n, coupling * ybar - W x^T
  std::vector<EntryIndex> hidden_;
  std::mt19937_64 rng_;
  bool beta_clamped_ = false;
  int sweep_ = -1;
};

// ---------------------------------------------------------------------------
// Drivers
// ---------------------------------------------------------------------------

struct FitResult {
  ModelParams params;
  VariationalState q;
  FitReport report;
};

/// Block coordinate ascent until the relative objective change
/// |F_t - F_{t-1}| / (1 + |F_t|) drops below config.rel_tol.
FitResult fit(const Dataset& data, const FitConfig& config);

/// How censored cells of the other targets are filled when they become
/// explanatory columns of a single-target fit.
enum class FillPolicy { DetectionLimit, HalfDetectionLimit, Zero };

/// Single-target design for `target`: the other target rows (censored cells
/// filled per `policy`) followed by the original features.
Dataset sttm_design(const Dataset& data, std::size_t target, FillPolicy policy);

/// m = 1 fit of `target` on sttm_design(data, target, policy).
FitResult sttm_fit(const Dataset& data, std::size_t target, FillPolicy policy,
                   const FitConfig& config);

}  // namespace mttm
