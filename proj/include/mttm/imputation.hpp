#pragma once

#include <optional>
#include <vector>

#include "mttm/core.hpp"
#include "mttm/fit.hpp"

namespace mttm {

struct ImputationResult {
  Eigen::MatrixXd completed;  // m x n
  ModelParams params;
  VariationalState q;
  FitReport report;
};

/// Observed cells copied through; censored cells replaced by the mean of their
/// truncated-normal factor in `q`.
Eigen::MatrixXd completed_values(const Dataset& data, const VariationalState& q);

/// Fit, then fill every censored cell with its posterior expectation.
ImputationResult impute(const Dataset& data, const FitConfig& config);

/// Impute with fixed parameters: only the q factors are updated, sweeping
/// until no mean moves by more than rel_tol * (1 + |mean|).
ImputationResult impute_with_model(const ModelParams& params, const Dataset& data,
                                   int max_sweeps = 1000, double rel_tol = 1e-12);

/// Zero-noise solution of the coupled relations y_k = <a_k, y_{\k}> + <w_k, x>
/// for the targets not given in `known` (size m, nullopt = unknown). Known
/// entries pass through. Throws SingularSystemError when the block of the
/// coupling matrix over the unknown targets is singular.
Eigen::VectorXd predict(const ModelParams& params, const Eigen::VectorXd& x,
                        const std::vector<std::optional<double>>& known);

}  // namespace mttm
