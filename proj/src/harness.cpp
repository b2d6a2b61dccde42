#include "mttm/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>
#include <random>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "mttm/imputation.hpp"

namespace mttm::harness {

namespace {

using Index = Eigen::Index;

Index idx(std::size_t v) { return static_cast<Index>(v); }

std::string fmt(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Coupling matrix I - A^T for generator coefficients.
Eigen::MatrixXd coupling_of(const Coefficients& coef) {
  ModelParams p;
  p.a = coef.a;
  p.w = coef.w;
  return p.coupling_matrix();
}

double spectral_radius(const Eigen::MatrixXd& mat) {
  if (mat.size() == 0) return 0.0;
  return Eigen::EigenSolver<Eigen::MatrixXd>(mat, false).eigenvalues().cwiseAbs().maxCoeff();
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - mu) * (x - mu);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a combined state
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Coefficients random_coefficients(std::size_t m, std::size_t d, double coupling, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mag(0.8, 1.2);
  std::bernoulli_distribution sign(0.5);
  std::normal_distribution<double> normal(0.0, 1.0);
  Coefficients coef;
  coef.w.resize(idx(m), idx(d));
  for (Index k = 0; k < coef.w.rows(); ++k)
    for (Index j = 0; j < coef.w.cols(); ++j) coef.w(k, j) = normal(rng);
  coef.a = Eigen::MatrixXd::Zero(idx(m), m > 0 ? idx(m) - 1 : 0);
  if (coupling == 0.0 || m < 2) return coef;
  for (int attempt = 0; attempt < 10000; ++attempt) {
    for (Index k = 0; k < coef.a.rows(); ++k)
      for (Index j = 0; j < coef.a.cols(); ++j)
        coef.a(k, j) = (sign(rng) ? 1.0 : -1.0) * coupling * mag(rng);
    const Eigen::MatrixXd a_mat = Eigen::MatrixXd::Identity(idx(m), idx(m)) - coupling_of(coef);
    if (spectral_radius(a_mat) < 0.95) return coef;
  }
  throw std::invalid_argument("could not draw coupling coefficients with spectral radius < 0.95");
}

SyntheticData generate_synthetic(std::size_t m, std::size_t d, std::size_t n,
                                 const Coefficients& coef, double beta, std::uint64_t seed) {
  if (m < 1 || n < 1) throw std::invalid_argument("generator needs m >= 1 and n >= 1");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("generator beta must be positive and finite");
  if (coef.a.rows() != idx(m) || coef.a.cols() != idx(m) - 1 || coef.w.rows() != idx(m) ||
      coef.w.cols() != idx(d)) {
    throw std::invalid_argument("coefficient shapes do not match (m, d)");
  }
  const Eigen::MatrixXd c = coupling_of(coef);
  const Eigen::MatrixXd a_mat = Eigen::MatrixXd::Identity(idx(m), idx(m)) - c;
  if (spectral_radius(a_mat) >= 1.0)
    throw std::invalid_argument("coupling coefficients have spectral radius >= 1");
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(c).singularValues();
  if (!(sv(sv.size() - 1) > 0.0) || sv(0) / sv(sv.size() - 1) > 1e6)
    throw std::invalid_argument("coupling system is ill-conditioned (condition number > 1e6)");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double noise_sd = 1.0 / std::sqrt(beta);

  SyntheticData out;
  Dataset& data = out.data;
  data.x.resize(idx(n), idx(d));
  for (Index i = 0; i < data.x.rows(); ++i)
    for (Index j = 0; j < data.x.cols(); ++j) data.x(i, j) = normal(rng);
  Eigen::MatrixXd rhs = coef.w * data.x.transpose();
  for (Index i = 0; i < rhs.cols(); ++i)
    for (Index k = 0; k < rhs.rows(); ++k) rhs(k, i) += noise_sd * normal(rng);
  out.truth = c.partialPivLu().solve(rhs);

  data.y = TargetMatrix(m, n);
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t i = 0; i < n; ++i) data.y(k, i) = Observed{out.truth(idx(k), idx(i))};
  for (std::size_t k = 0; k < m; ++k) data.target_names.push_back("y" + std::to_string(k + 1));
  for (std::size_t j = 0; j < d; ++j) data.feature_names.push_back("x" + std::to_string(j + 1));
  return out;
}

CensoredData apply_censoring(const Dataset& full, const CensoringScenario& scenario) {
  if (!(scenario.negative_rate >= 0.0) || !(scenario.negative_rate < 1.0))
    throw ValidationError("negative rate must lie in [0, 1)");
  CensoredData out;
  out.data = full;
  const std::size_t n = full.n();
  const auto count =
      static_cast<std::size_t>(std::ceil(scenario.negative_rate * static_cast<double>(n) - 1e-9));
  if (count == 0) return out;
  if (count >= n) {
    std::ostringstream os;
    os << "negative rate " << scenario.negative_rate << " would censor every value of a row (n = " << n << ")";
    throw ValidationError(os.str());
  }

  for (std::size_t k : scenario.target_rows) {
    if (k >= full.m()) throw ValidationError("censoring row index out of range");
    std::vector<double> row(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto* obs = std::get_if<Observed>(&full.y(k, i));
      if (!obs) throw ValidationError("apply_censoring needs a fully observed row");
      row[i] = obs->value;
    }

    // Score each entry so that the censored set is the `count` smallest
    // scores; the window is then cut halfway between consecutive scores.
    std::vector<double> score(n);
    double centre = 0.0;
    if (scenario.side == CensorSide::Interval) {
      std::vector<double> sorted = row;
      std::sort(sorted.begin(), sorted.end());
      centre = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      switch (scenario.side) {
        case CensorSide::Left: score[i] = row[i]; break;
        case CensorSide::Right: score[i] = -row[i]; break;
        case CensorSide::Interval: score[i] = std::abs(row[i] - centre); break;
      }
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t p, std::size_t q) { return score[p] < score[q]; });
    const double inside = score[order[count - 1]];
    const double outside = score[order[count]];
    if (!(inside < outside)) {
      const auto achieved = static_cast<std::size_t>(
          std::count_if(score.begin(), score.end(), [&](double s) { return s <= inside; }));
      std::ostringstream os;
      os << "row " << k << ": ties prevent censoring exactly " << count << " entries (achieved "
         << achieved << ")";
      throw ValidationError(os.str());
    }
    const double cut = 0.5 * (inside + outside);
    CensoringBound bound;
    switch (scenario.side) {
      case CensorSide::Left: bound = CensoringBound::left(cut); break;
      case CensorSide::Right: bound = CensoringBound::right(-cut); break;
      case CensorSide::Interval: bound = CensoringBound::interval(centre - cut, centre + cut); break;
    }
    for (std::size_t r = 0; r < count; ++r) {
      const std::size_t i = order[r];
      out.data.y(k, i) = Censored{bound};
      out.hidden_truth[{k, i}] = row[i];
    }
  }
  return out;
}

double rmse(const ValueMap& imputed, const ValueMap& truth) {
  if (truth.empty()) throw std::invalid_argument("no censored entries to score");
  if (imputed.size() != truth.size()) throw std::invalid_argument("rmse key sets differ");
  double s = 0.0;
  for (const auto& [key, value] : truth) {
    const auto it = imputed.find(key);
    if (it == imputed.end()) throw std::invalid_argument("rmse key sets differ");
    s += (it->second - value) * (it->second - value);
  }
  return std::sqrt(s / static_cast<double>(truth.size()));
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired t-test needs equal lengths");
  if (a.size() < 2) throw std::invalid_argument("paired t-test needs at least two pairs");
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  const double scale = std::abs(*std::max_element(diff.begin(), diff.end(), [](double x, double y) {
    return std::abs(x) < std::abs(y);
  }));
  if (scale == 0.0) return {0.0, 1.0};
  const double mu = mean_of(diff);
  const double sd = sd_of(diff);
  if (!(sd > 1e-12 * scale)) throw std::domain_error("paired t-test: differences have zero variance");
  const double n = static_cast<double>(diff.size());
  TTestResult r;
  r.t = mu / (sd / std::sqrt(n));
  const boost::math::students_t dist(n - 1.0);
  r.p = std::clamp(2.0 * boost::math::cdf(dist, -std::abs(r.t)), 0.0, 1.0);
  return r;
}

CensoredData make_trial(const TrialSource& source, const CensoringScenario& scenario,
                        std::uint64_t master_seed, int trial) {
  const std::uint64_t seed =
      mix_seed(mix_seed(master_seed, scenario.seed), static_cast<std::uint64_t>(trial));
  Dataset full;
  if (const auto* gen = std::get_if<GeneratorSpec>(&source)) {
    full = generate_synthetic(gen->m, gen->d, gen->n, gen->coef, gen->beta, seed).data;
  } else {
    const auto& table = std::get<TableSource>(source);
    const std::size_t total = table.table.n();
    if (table.sample_size < 2 || table.sample_size > total)
      throw ValidationError("sample size must lie in [2, number of rows]");
    std::vector<std::size_t> rows(total);
    std::iota(rows.begin(), rows.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(rows.begin(), rows.end(), rng);
    rows.resize(table.sample_size);
    std::sort(rows.begin(), rows.end());
    full.target_names = table.table.target_names;
    full.feature_names = table.table.feature_names;
    full.x.resize(idx(rows.size()), table.table.x.cols());
    full.y = TargetMatrix(table.table.m(), rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      full.x.row(idx(r)) = table.table.x.row(idx(rows[r]));
      for (std::size_t k = 0; k < table.table.m(); ++k) full.y(k, r) = table.table.y(k, rows[r]);
    }
  }
  return apply_censoring(full, scenario);
}

TrialScore score_trial(const CensoredData& trial, const std::vector<std::size_t>& censored_rows,
                       const BenchmarkOptions& options) {
  if (trial.hidden_truth.empty()) throw ValidationError("no censored entries to score");
  const Dataset data = options.add_intercept ? with_intercept(trial.data) : trial.data;

  ValueMap mttm_values;
  const ImputationResult joint = impute(data, options.config);
  for (const auto& [key, truth] : trial.hidden_truth) {
    mttm_values[key] = joint.completed(idx(key.k), idx(key.i));
  }

  ValueMap sttm_values;
  for (std::size_t k : censored_rows) {
    bool any = false;
    for (std::size_t i = 0; i < data.n() && !any; ++i) any = is_censored(data.y(k, i));
    if (!any) continue;
    const FitResult single = sttm_fit(data, k, options.fill, options.config);
    for (std::size_t i = 0; i < data.n(); ++i) {
      if (is_censored(data.y(k, i))) sttm_values[{k, i}] = single.q(0, i).mean;
    }
  }

  return {rmse(mttm_values, trial.hidden_truth), rmse(sttm_values, trial.hidden_truth)};
}

std::string scenario_name(const CensoringScenario& s) {
  const char* side = s.side == CensorSide::Left    ? "left"
                     : s.side == CensorSide::Right ? "right"
                                                   : "interval";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s-%g", side, s.negative_rate);
  return buf;
}

std::vector<BenchmarkReport> benchmark_compare(const TrialSource& source,
                                               const std::vector<CensoringScenario>& scenarios,
                                               const BenchmarkOptions& options) {
  if (options.trials < 2) throw std::invalid_argument("benchmark needs at least two trials");
  options.config.validate();

  std::vector<BenchmarkReport> reports;
  for (const CensoringScenario& scenario : scenarios) {
    const int trials = options.trials;
    std::vector<TrialScore> scores(static_cast<std::size_t>(trials));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(trials));

#pragma omp parallel for schedule(dynamic)
    for (int t = 0; t < trials; ++t) {
      try {
        const CensoredData trial = make_trial(source, scenario, options.master_seed, t);
        scores[static_cast<std::size_t>(t)] = score_trial(trial, scenario.target_rows, options);
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    }

    for (int t = 0; t < trials; ++t) {
      if (!errors[static_cast<std::size_t>(t)]) continue;
      try {
        std::rethrow_exception(errors[static_cast<std::size_t>(t)]);
      } catch (const ValidationError&) {
        throw;
      } catch (const std::exception& e) {
        std::ostringstream os;
        os << scenario_name(scenario) << ", trial " << t << ": " << e.what();
        throw TrialError(os.str(), t);
      }
    }

    BenchmarkReport rep;
    rep.scenario = scenario_name(scenario);
    rep.rate = scenario.negative_rate;
    rep.trials = trials;
    for (const TrialScore& s : scores) {
      rep.mttm_rmse.push_back(s.mttm);
      rep.sttm_rmse.push_back(s.sttm);
    }
    rep.mttm_mean = mean_of(rep.mttm_rmse);
    rep.mttm_sd = sd_of(rep.mttm_rmse);
    rep.sttm_mean = mean_of(rep.sttm_rmse);
    rep.sttm_sd = sd_of(rep.sttm_rmse);
    const TTestResult tt = paired_t_test(rep.mttm_rmse, rep.sttm_rmse);
    rep.t = tt.t;
    rep.p = tt.p;
    reports.push_back(std::move(rep));
  }
  return reports;
}

std::string format_tsv(const std::vector<BenchmarkReport>& reports) {
  std::ostringstream os;
  os << "scenario\trate\ttrials\tmttm_mean\tmttm_sd\tsttm_mean\tsttm_sd\tt\tp\n";
  for (const auto& r : reports) {
    os << r.scenario << '\t' << fmt(r.rate) << '\t' << r.trials << '\t' << fmt(r.mttm_mean) << '\t'
       << fmt(r.mttm_sd) << '\t' << fmt(r.sttm_mean) << '\t' << fmt(r.sttm_sd) << '\t'
       << fmt(r.t) << '\t' << fmt(r.p) << '\n';
  }
  return os.str();
}

std::string format_json(const std::vector<BenchmarkReport>& reports) {
  auto list = [](const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
    return s + "]";
  };
  std::ostringstream os;
  os << "[\n";
  for (std::size_t j = 0; j < reports.size(); ++j) {
    const auto& r = reports[j];
    os << "  {\"scenario\": \"" << r.scenario << "\", \"rate\": " << fmt(r.rate)
       << ", \"trials\": " << r.trials << ", \"mttm_mean\": " << fmt(r.mttm_mean)
       << ", \"mttm_sd\": " << fmt(r.mttm_sd) << ", \"sttm_mean\": " << fmt(r.sttm_mean)
       << ", \"sttm_sd\": " << fmt(r.sttm_sd) << ", \"t\": " << fmt(r.t) << ", \"p\": " << fmt(r.p)
       << ",\n   \"mttm_rmse\": " << list(r.mttm_rmse) << ",\n   \"sttm_rmse\": " << list(r.sttm_rmse)
       << "}" << (j + 1 < reports.size() ? "," : "") << "\n";
  }
  os << "]\n";
  return os.str();
}

ConvergenceTrace convergence_probe(const Dataset& data, const FitConfig& config, int sweeps,
                                   int long_run_sweeps) {
  if (sweeps < 1) throw std::invalid_argument("convergence probe needs sweeps >= 1");
  FitConfig long_run = config;
  long_run.record_trace = true;
  long_run.rel_tol = 1e-15;
  long_run.max_sweeps = std::max(long_run_sweeps, sweeps);
  const FitResult r = fit(data, long_run);

  ConvergenceTrace out;
  const auto& trace = r.report.objective_trace;
  out.optimum = trace.back();
  for (int t = 0; t < sweeps; ++t) {
    // after convergence the objective stays where it settled
    const double f = static_cast<std::size_t>(t) < trace.size() ? trace[static_cast<std::size_t>(t)]
                                                                 : trace.back();
    out.objective.push_back(f);
    out.gap.push_back(out.optimum - f);
  }
  return out;
}

std::vector<RuntimeRow> runtime_probe(const RuntimeOptions& options) {
  if (options.sweeps < 1) throw std::invalid_argument("runtime probe needs sweeps >= 1");
  options.config.validate();
  const Coefficients coef = random_coefficients(options.m, options.d, options.coupling, options.seed);
  std::vector<std::size_t> rows(options.m);
  std::iota(rows.begin(), rows.end(), 0);

  std::vector<RuntimeRow> out;
  for (std::size_t n : options.n_grid) {
    const SyntheticData syn =
        generate_synthetic(options.m, options.d, n, coef, options.beta, mix_seed(options.seed, n));
    const CensoredData censored =
        apply_censoring(syn.data, {options.rate, rows, CensorSide::Left, 0});
    const Dataset data = with_intercept(censored.data);

    const auto start = std::chrono::steady_clock::now();
    AscentWorkspace ws = AscentWorkspace::initialize(data, options.config);
    for (int s = 1; s <= options.sweeps; ++s) {
      ws.set_sweep(s);
      ws.q_sweep();
      ws.theta_update();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.push_back({n, elapsed});
  }
  return out;
}

std::string format_runtime_tsv(const std::vector<RuntimeRow>& rows) {
  std::ostringstream os;
  os << "n\tseconds\n";
  for (const auto& r : rows) os << r.n << '\t' << fmt(r.seconds) << '\n';
  return os.str();
}

}  // namespace mttm::harness
