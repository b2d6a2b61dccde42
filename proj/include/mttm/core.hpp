#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace mttm {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Input file or cell could not be parsed.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input parsed but violates a structural requirement.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Base for failures of the numerical routines. Carries the sweep index when
/// raised from inside a fit (0 = initialization, -1 = not inside a fit).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, int sweep = -1)
      : std::runtime_error(what), sweep_(sweep) {}
  int sweep() const noexcept { return sweep_; }

 private:
  int sweep_;
};

class SingularSystemError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateUpdateError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// ---------------------------------------------------------------------------
// Censoring
// ---------------------------------------------------------------------------

/// Window [lower, upper] known to contain a censored value. Either side may be
/// infinite; a left-censored value below a detection limit u is (-inf, u].
struct CensoringBound {
  double lower = -kInf;
  double upper = kInf;

  static CensoringBound left(double limit) { return {-kInf, limit}; }
  static CensoringBound right(double limit) { return {limit, kInf}; }
  static CensoringBound interval(double lo, double hi) { return {lo, hi}; }

  bool valid() const {
    return !std::isnan(lower) && !std::isnan(upper) && lower < upper &&
           lower != kInf && upper != -kInf;
  }
  bool has_finite_side() const { return std::isfinite(lower) || std::isfinite(upper); }
  bool contains(double v) const { return v >= lower && v <= upper; }
  bool strictly_contains(double v) const {
    return (lower == -kInf || v > lower) && (upper == kInf || v < upper);
  }

  friend bool operator==(const CensoringBound&, const CensoringBound&) = default;
};

struct Observed {
  double value = 0.0;
  friend bool operator==(const Observed&, const Observed&) = default;
};

struct Censored {
  CensoringBound bound;
  friend bool operator==(const Censored&, const Censored&) = default;
};

using TargetEntry = std::variant<Observed, Censored>;

inline bool is_censored(const TargetEntry& e) { return std::holds_alternative<Censored>(e); }

/// Representative value for a censored window: the finite bound for one-sided
/// windows, the midpoint for intervals.
double bound_fill(const CensoringBound& b);

/// m x n grid of target entries, row k = target variable, column i = example.
class TargetMatrix {
 public:
  TargetMatrix() = default;
  TargetMatrix(std::size_t m, std::size_t n) : m_(m), n_(n), cells_(m * n, Observed{0.0}) {}

  std::size_t rows() const { return m_; }
  std::size_t cols() const { return n_; }

  TargetEntry& operator()(std::size_t k, std::size_t i) { return cells_[k * n_ + i]; }
  const TargetEntry& operator()(std::size_t k, std::size_t i) const { return cells_[k * n_ + i]; }

  std::size_t censored_count() const;

  friend bool operator==(const TargetMatrix&, const TargetMatrix&) = default;

 private:
  std::size_t m_ = 0;
  std::size_t n_ = 0;
  std::vector<TargetEntry> cells_;
};

/// Index of one cell of the target matrix.
struct EntryIndex {
  std::size_t k = 0;
  std::size_t i = 0;
  friend auto operator<=>(const EntryIndex&, const EntryIndex&) = default;
};

struct Dataset {
  Eigen::MatrixXd x;  // n x d explanatory variables
  TargetMatrix y;     // m x n targets
  std::vector<std::string> target_names;
  std::vector<std::string> feature_names;

  std::size_t m() const { return y.rows(); }
  std::size_t n() const { return y.cols(); }
  std::size_t d() const { return static_cast<std::size_t>(x.cols()); }

  /// Visible entries (E_v) and hidden entries (E_h), each in row-major order.
  std::vector<EntryIndex> visible_entries() const;
  std::vector<EntryIndex> hidden_entries() const;
};

/// Name given to the constant feature column appended for an intercept.
inline constexpr const char* kInterceptName = "(intercept)";

/// Returns a copy of `data` with a constant-1 feature column appended.
Dataset with_intercept(const Dataset& data);

struct ValidationResult {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  std::size_t visible = 0;
  std::size_t hidden = 0;

  bool ok() const { return errors.empty(); }
};

/// Structural diagnostics. Never throws.
ValidationResult dataset_validate(const Dataset& data);

/// Throws ValidationError listing every violation when validation fails.
void require_valid(const Dataset& data);

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

/// Parameters of the coupled regressions
///   y_k = <a_k, y_{\k}> + <w_k, x> + eps,  eps ~ N(0, 1/beta).
/// Row k of `a` is a_k, indexed over the other targets in increasing order.
struct ModelParams {
  Eigen::MatrixXd a;  // m x (m-1)
  Eigen::MatrixXd w;  // m x d
  double beta = 1.0;

  std::size_t m() const { return static_cast<std::size_t>(w.rows()); }
  std::size_t d() const { return static_cast<std::size_t>(w.cols()); }

  static ModelParams zeros(std::size_t m, std::size_t d, double beta = 1.0);

  /// Coefficient of target j in the regression of target k (0 when j == k).
  double coupling(std::size_t k, std::size_t j) const {
    if (j == k) return 0.0;
    return a(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j < k ? j : j - 1));
  }

  /// The m x m matrix with unit diagonal and entry (k, j) = -a_k[j]. Row k
  /// applied to a target vector gives y_k - <a_k, y_{\k}>. It equals I - A^T
  /// for the matrix A whose k-th column holds a_k with a structural zero.
  Eigen::MatrixXd coupling_matrix() const;

  void check_dimensions(const Dataset& data) const;
};

// ---------------------------------------------------------------------------
// Variational state
// ---------------------------------------------------------------------------

/// Per-entry factor q_{k,i}. Observed entries are point masses; censored ones
/// are truncated normals with cached moments.
struct QEntry {
  bool censored = false;
  double mu = 0.0;
  double sigma = 0.0;
  CensoringBound bound;
  double mean = 0.0;
  double second_moment = 0.0;
  double variance = 0.0;  // cached separately: second_moment - mean^2 cancels
  double entropy = 0.0;   // unused for point masses
};

class VariationalState {
 public:
  VariationalState() = default;

  /// Point masses at observed values; censored entries start as
  /// TN(bound_fill(bound), sigma, bound).
  static VariationalState from_dataset(const Dataset& data, double sigma);

  std::size_t rows() const { return m_; }
  std::size_t cols() const { return n_; }

  const QEntry& operator()(std::size_t k, std::size_t i) const { return cells_[k * n_ + i]; }

  /// Replace (k, i) with TN(mu, sigma, bound) and refresh cached moments.
  /// Throws std::domain_error for sigma <= 0 or for an observed entry.
  const QEntry& set_truncated_normal(std::size_t k, std::size_t i, double mu, double sigma);

  /// Maximum relative deviation between cached and recomputed moments.
  double max_cache_error() const;

  Eigen::MatrixXd means() const;
  Eigen::MatrixXd variances() const;

 private:
  std::size_t m_ = 0;
  std::size_t n_ = 0;
  std::vector<QEntry> cells_;
};

// ---------------------------------------------------------------------------
// Fit configuration and report
// ---------------------------------------------------------------------------

enum class SweepOrder { Cyclic, Random };

struct FitConfig {
  double lambda_reg = 1e-3;
  int max_sweeps = 500;
  double rel_tol = 1e-8;
  SweepOrder order = SweepOrder::Cyclic;
  std::uint64_t seed = 0;
  bool record_trace = true;

  // Block restrictions. Used for controlled comparisons; both default off.
  bool freeze_coupling = false;        // hold every a_k at zero
  std::optional<double> fixed_beta;    // hold beta at this value

  void validate() const;
};

struct FitReport {
  std::vector<double> objective_trace;
  int sweeps_run = 0;
  bool converged = false;
  double elapsed_seconds = 0.0;
  bool beta_clamped = false;
  double final_objective = 0.0;
};

/// Bounds applied to the noise precision after every parameter update.
inline constexpr double kBetaMin = 1e-12;
inline constexpr double kBetaMax = 1e12;

}  // namespace mttm
