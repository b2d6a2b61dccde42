#pragma once

// Evaluation protocol: synthetic data, artificial censoring at prescribed
// negative rates, MTTM against repeated single-target fits, RMSE and paired
// t-test, convergence and runtime probes.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mttm/core.hpp"
#include "mttm/fit.hpp"

namespace mttm::harness {

/// Deterministic 64-bit mixer used to derive per-trial seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

struct Coefficients {
  Eigen::MatrixXd a;  // m x (m-1), same layout as ModelParams::a
  Eigen::MatrixXd w;  // m x d
};

/// Cross-target coefficients of magnitude coupling * U(0.8, 1.2) with random
/// signs, redrawn until the spectral radius of the coupling is below 0.95;
/// feature coefficients standard normal.
Coefficients random_coefficients(std::size_t m, std::size_t d, double coupling, std::uint64_t seed);

struct SyntheticData {
  Dataset data;           // fully observed
  Eigen::MatrixXd truth;  // m x n, equal to the observed values
};

/// X ~ N(0, 1) entries; each column of Y solves (I - A^T) y_i = W^T x_i + eps_i
/// with eps_i ~ N(0, I / beta). Throws std::invalid_argument when the coupling
/// has spectral radius >= 1 or I - A^T has condition number > 1e6.
SyntheticData generate_synthetic(std::size_t m, std::size_t d, std::size_t n,
                                 const Coefficients& coef, double beta, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Censoring
// ---------------------------------------------------------------------------

enum class CensorSide { Left, Right, Interval };

struct CensoringScenario {
  double negative_rate = 0.0;
  std::vector<std::size_t> target_rows;
  CensorSide side = CensorSide::Left;
  std::uint64_t seed = 0;
};

using ValueMap = std::map<EntryIndex, double>;

struct CensoredData {
  Dataset data;
  ValueMap hidden_truth;
};

/// Hides ceil(rate * n) entries of each designated row behind a per-row
/// limit placed between consecutive order statistics. Left hides the
/// smallest values, Right the largest, Interval those closest to the row
/// median. Throws ValidationError when ties make the exact count
/// unreachable or no observed value would remain.
CensoredData apply_censoring(const Dataset& full, const CensoringScenario& scenario);

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

/// sqrt(mean squared difference). Key sets must match; empty maps throw.
double rmse(const ValueMap& imputed, const ValueMap& truth);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
};

/// Two-sided paired Student t-test on a - b. Identical samples give t = 0,
/// p = 1; differences that are constant but nonzero throw std::domain_error.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

// ---------------------------------------------------------------------------
// Benchmark
// ---------------------------------------------------------------------------

struct GeneratorSpec {
  std::size_t m = 4;
  std::size_t d = 3;
  std::size_t n = 100;
  Coefficients coef;
  double beta = 4.0;
};

/// A fully observed table; each trial draws `sample_size` rows without
/// replacement.
struct TableSource {
  Dataset table;
  std::size_t sample_size = 100;
};

using TrialSource = std::variant<GeneratorSpec, TableSource>;

struct BenchmarkOptions {
  int trials = 50;
  std::uint64_t master_seed = 0;
  FitConfig config;
  FillPolicy fill = FillPolicy::DetectionLimit;
  bool add_intercept = true;
};

struct BenchmarkReport {
  std::string scenario;
  double rate = 0.0;
  int trials = 0;
  std::vector<double> mttm_rmse;
  std::vector<double> sttm_rmse;
  double mttm_mean = 0.0;
  double mttm_sd = 0.0;
  double sttm_mean = 0.0;
  double sttm_sd = 0.0;
  double t = 0.0;
  double p = 1.0;
};

/// Raised when a trial fails; the whole report is abandoned.
class TrialError : public NumericalError {
 public:
  TrialError(const std::string& what, int trial) : NumericalError(what), trial_(trial) {}
  int trial() const noexcept { return trial_; }

 private:
  int trial_;
};

/// Data for trial `trial` of a scenario: a fresh synthetic draw or a row
/// sample of the table, then censored.
CensoredData make_trial(const TrialSource& source, const CensoringScenario& scenario,
                        std::uint64_t master_seed, int trial);

struct TrialScore {
  double mttm = 0.0;
  double sttm = 0.0;
};

/// Imputes one censored dataset with MTTM and with the repeated single-target
/// baseline, scoring both on the hidden entries.
TrialScore score_trial(const CensoredData& trial, const std::vector<std::size_t>& censored_rows,
                       const BenchmarkOptions& options);

/// Runs every scenario for options.trials trials. Trials execute in parallel;
/// results are ordered by trial index and independent of the thread count.
std::vector<BenchmarkReport> benchmark_compare(const TrialSource& source,
                                               const std::vector<CensoringScenario>& scenarios,
                                               const BenchmarkOptions& options);

std::string scenario_name(const CensoringScenario& s);

/// Tab-separated: header line then one row per scenario with columns
/// scenario, rate, trials, mttm_mean, mttm_sd, sttm_mean, sttm_sd, t, p.
std::string format_tsv(const std::vector<BenchmarkReport>& reports);

/// JSON array of objects with the same fields plus the per-trial RMSEs.
std::string format_json(const std::vector<BenchmarkReport>& reports);

// ---------------------------------------------------------------------------
// Probes
// ---------------------------------------------------------------------------

struct ConvergenceTrace {
  double optimum = 0.0;          // objective after the long run
  std::vector<double> objective; // F after sweep t (t = 1..)
  std::vector<double> gap;       // optimum - objective
};

/// Runs the fit for a long time with a tight tolerance and reports the
/// objective gap of the first `sweeps` sweeps relative to where it settled.
ConvergenceTrace convergence_probe(const Dataset& data, const FitConfig& config, int sweeps = 100,
                                   int long_run_sweeps = 20000);

struct RuntimeRow {
  std::size_t n = 0;
  double seconds = 0.0;
};

struct RuntimeOptions {
  std::vector<std::size_t> n_grid{10, 17, 31, 56, 100, 177, 316, 562, 1000};
  int sweeps = 100;
  std::size_t m = 4;
  std::size_t d = 3;
  double coupling = 0.5;
  double beta = 4.0;
  double rate = 0.2;
  std::uint64_t seed = 0;
  FitConfig config;
};

/// Wall-clock seconds for initialization plus exactly `sweeps` sweeps on a
/// synthetic left-censored problem of each size.
std::vector<RuntimeRow> runtime_probe(const RuntimeOptions& options);

std::string format_runtime_tsv(const std::vector<RuntimeRow>& rows);

}  // namespace mttm::harness
