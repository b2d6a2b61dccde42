#include "mttm/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <numeric>
#include <sstream>

#include "mttm/csv.hpp"
#include "mttm/fit.hpp"
#include "mttm/harness.hpp"
#include "mttm/imputation.hpp"
#include "mttm/model_io.hpp"

namespace mttm {

namespace {

struct FitFlags {
  double lambda = 1e-3;
  int max_sweeps = 500;
  double tol = 1e-8;
  std::string order = "cyclic";
  std::uint64_t seed = 0;

  FitConfig config() const {
    FitConfig c;
    c.lambda_reg = lambda;
    c.max_sweeps = max_sweeps;
    c.rel_tol = tol;
    c.order = order == "random" ? SweepOrder::Random : SweepOrder::Cyclic;
    c.seed = seed;
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      throw ValidationError(e.what());
    }
    return c;
  }
};

void add_fit_flags(CLI::App* cmd, FitFlags& f, bool with_seed = true) {
  cmd->add_option("--lambda", f.lambda, "Ridge regularization constant")->capture_default_str();
  cmd->add_option("--max-sweeps", f.max_sweeps, "Maximum number of ascent sweeps")->capture_default_str();
  cmd->add_option("--tol", f.tol, "Relative objective change that stops the ascent")->capture_default_str();
  cmd->add_option("--order", f.order, "Order of the per-entry updates within a sweep")
      ->check(CLI::IsMember({"cyclic", "random"}))
      ->capture_default_str();
  if (with_seed)
    cmd->add_option("--seed", f.seed, "Seed for the random sweep order")->capture_default_str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream o(path, std::ios::binary);
  if (!o) throw std::runtime_error("cannot open '" + path + "' for writing");
  o << text;
  if (!o) throw std::runtime_error("failed writing '" + path + "'");
}

std::string default_model_path(const std::string& input) {
  const auto dot = input.find_last_of('.');
  const auto slash = input.find_last_of("/\\");
  const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
  return (has_ext ? input.substr(0, dot) : input) + ".model.json";
}

void print_summary(std::ostream& out, const FitReport& r, double beta) {
  out << "sweeps\t" << r.sweeps_run << '\n'
      << "final_objective\t" << csv::format_number(r.final_objective) << '\n'
      << "converged\t" << (r.converged ? "true" : "false") << '\n'
      << "elapsed_seconds\t" << csv::format_number(r.elapsed_seconds) << '\n'
      << "beta\t" << csv::format_number(beta) << '\n';
  if (r.beta_clamped) out << "warning\tnoise precision clamped\n";
}

harness::CensorSide parse_side(const std::string& s) {
  if (s == "left") return harness::CensorSide::Left;
  if (s == "right") return harness::CensorSide::Right;
  return harness::CensorSide::Interval;
}

FillPolicy parse_fill(const std::string& s) {
  if (s == "half") return FillPolicy::HalfDetectionLimit;
  if (s == "zero") return FillPolicy::Zero;
  return FillPolicy::DetectionLimit;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-target Tobit model: fitting, imputation and benchmarks for censored tables",
               "mttm"};
  app.require_subcommand(1);

  // fit
  std::string fit_input, fit_model_out;
  std::vector<std::string> fit_targets;
  bool fit_no_intercept = false;
  FitFlags fit_flags;
  auto* fit_cmd = app.add_subcommand("fit", "Fit the model to a CSV table and write a model document");
  fit_cmd->add_option("input", fit_input, "Input CSV")->required();
  fit_cmd->add_option("--targets", fit_targets, "Comma-separated target columns")
      ->required()
      ->delimiter(',');
  add_fit_flags(fit_cmd, fit_flags);
  fit_cmd->add_option("--model-out", fit_model_out,
                      "Model document path (default: input name with .model.json)");
  fit_cmd->add_flag("--no-intercept", fit_no_intercept, "Do not append a constant feature");

  // impute
  std::string imp_input, imp_model, imp_out;
  std::vector<std::string> imp_targets;
  bool imp_no_intercept = false, imp_mark = false;
  FitFlags imp_flags;
  auto* imp_cmd = app.add_subcommand("impute", "Replace censored target cells by their expectations");
  imp_cmd->add_option("input", imp_input, "Input CSV")->required();
  auto* imp_model_opt = imp_cmd->add_option("--model", imp_model, "Use a fitted model document");
  auto* imp_targets_opt =
      imp_cmd->add_option("--targets", imp_targets, "Comma-separated target columns (fit first)")
          ->delimiter(',');
  imp_model_opt->excludes(imp_targets_opt);
  add_fit_flags(imp_cmd, imp_flags);
  imp_cmd->add_flag("--no-intercept", imp_no_intercept, "Do not append a constant feature");
  imp_cmd->add_option("--out", imp_out, "Output CSV (default: standard output)");
  imp_cmd->add_flag("--mark", imp_mark, "Append a <target>_imputed column of 0/1 per target");

  // simulate
  std::size_t sim_m = 4, sim_d = 3, sim_n = 100, sim_sample = 100;
  std::vector<double> sim_rates{0.2};
  std::string sim_side = "left", sim_format = "tsv", sim_fill = "limit", sim_data;
  std::vector<std::string> sim_targets;
  int sim_trials = 50;
  std::uint64_t sim_seed = 0;
  double sim_coupling = 0.5, sim_beta = 4.0;
  bool sim_no_intercept = false;
  FitFlags sim_flags;
  auto* sim_cmd = app.add_subcommand("simulate", "Compare MTTM and repeated STTM imputation over seeded trials");
  sim_cmd->add_option("--m", sim_m, "Number of targets")->capture_default_str();
  sim_cmd->add_option("--d", sim_d, "Number of features")->capture_default_str();
  sim_cmd->add_option("--n", sim_n, "Examples per trial")->capture_default_str();
  sim_cmd->add_option("--rate", sim_rates, "Negative rate(s), comma-separated")
      ->delimiter(',')
      ->capture_default_str();
  sim_cmd->add_option("--side", sim_side, "Censoring side")
      ->check(CLI::IsMember({"left", "right", "interval"}))
      ->capture_default_str();
  sim_cmd->add_option("--trials", sim_trials, "Trials per rate")->capture_default_str();
  sim_cmd->add_option("--seed", sim_seed, "Master seed")->capture_default_str();
  sim_cmd->add_option("--coupling", sim_coupling, "Magnitude of cross-target coefficients")
      ->capture_default_str();
  sim_cmd->add_option("--beta", sim_beta, "Noise precision of the generator")->capture_default_str();
  sim_cmd->add_option("--format", sim_format, "Report format")
      ->check(CLI::IsMember({"tsv", "json"}))
      ->capture_default_str();
  sim_cmd->add_option("--fill", sim_fill, "Baseline fill of censored explanatory cells")
      ->check(CLI::IsMember({"limit", "half", "zero"}))
      ->capture_default_str();
  auto* sim_data_opt =
      sim_cmd->add_option("--data", sim_data, "Sample trials from this fully observed CSV instead");
  sim_cmd->add_option("--targets", sim_targets, "Target columns of --data")
      ->delimiter(',')
      ->needs(sim_data_opt);
  sim_cmd->add_option("--sample-size", sim_sample, "Rows drawn per trial from --data")
      ->capture_default_str();
  sim_cmd->add_flag("--no-intercept", sim_no_intercept, "Do not append a constant feature");
  add_fit_flags(sim_cmd, sim_flags, false);

  // runtime
  harness::RuntimeOptions rt;
  std::vector<std::size_t> rt_grid = rt.n_grid;
  FitFlags rt_flags;
  auto* rt_cmd = app.add_subcommand("runtime", "Time a fixed number of sweeps over a grid of sample sizes");
  rt_cmd->add_option("--n-grid", rt_grid, "Comma-separated sample sizes")
      ->delimiter(',')
      ->capture_default_str();
  rt_cmd->add_option("--sweeps", rt.sweeps, "Sweeps per size")->capture_default_str();
  rt_cmd->add_option("--m", rt.m, "Number of targets")->capture_default_str();
  rt_cmd->add_option("--d", rt.d, "Number of features")->capture_default_str();
  rt_cmd->add_option("--coupling", rt.coupling, "Magnitude of cross-target coefficients")
      ->capture_default_str();
  rt_cmd->add_option("--beta", rt.beta, "Noise precision of the generator")->capture_default_str();
  rt_cmd->add_option("--rate", rt.rate, "Negative rate")->capture_default_str();
  rt_cmd->add_option("--seed", rt.seed, "Generator seed")->capture_default_str();
  rt_cmd->add_option("--lambda", rt_flags.lambda, "Ridge regularization constant")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitParse;
  }

  try {
    if (*fit_cmd) {
      const FitConfig config = fit_flags.config();
      const csv::Table table = csv::read_file(fit_input);
      const Dataset data = csv::to_dataset(table, fit_targets, !fit_no_intercept);
      const FitResult r = fit(data, config);
      ModelDocument doc{r.params, data.target_names, data.feature_names, config.lambda_reg, r.report};
      const std::string path = fit_model_out.empty() ? default_model_path(fit_input) : fit_model_out;
      save_model(doc, path);
      print_summary(out, r.report, r.params.beta);
      out << "model\t" << path << '\n';
    } else if (*imp_cmd) {
      if (imp_model.empty() && imp_targets.empty())
        throw ValidationError("impute needs --model or --targets");
      csv::Table table = csv::read_file(imp_input);
      Dataset data;
      ImputationResult r;
      if (!imp_model.empty()) {
        const ModelDocument doc = load_model(imp_model);
        data = csv::to_dataset(table, doc.target_names, doc.feature_names);
        r = impute_with_model(doc.params, data);
      } else {
        const FitConfig config = imp_flags.config();
        data = csv::to_dataset(table, imp_targets, !imp_no_intercept);
        r = impute(data, config);
      }
      for (std::size_t k = 0; k < data.m(); ++k) {
        const std::size_t col = table.column(data.target_names[k]);
        if (imp_mark) table.header.push_back(data.target_names[k] + "_imputed");
        for (std::size_t i = 0; i < data.n(); ++i) {
          const bool hidden = is_censored(data.y(k, i));
          if (hidden)
            table.rows[i][col] = csv::format_number(
                r.completed(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)));
          if (imp_mark) table.rows[i].push_back(hidden ? "1" : "0");
        }
      }
      const std::string text = csv::serialize(table);
      if (imp_out.empty()) {
        out << text;
      } else {
        write_text(imp_out, text);
      }
    } else if (*sim_cmd) {
      for (double rate : sim_rates) {
        if (rate == 0.0) throw ValidationError("nothing to score: negative rate 0 censors no entries");
        if (!(rate > 0.0 && rate < 1.0)) throw ValidationError("negative rate must lie in (0, 1)");
      }
      if (sim_trials < 2) throw ValidationError("simulate needs --trials >= 2");
      harness::BenchmarkOptions options;
      options.trials = sim_trials;
      options.master_seed = sim_seed;
      sim_flags.seed = sim_seed;
      options.config = sim_flags.config();
      options.fill = parse_fill(sim_fill);
      options.add_intercept = !sim_no_intercept;

      harness::TrialSource source;
      std::size_t m = sim_m;
      if (!sim_data.empty()) {
        if (sim_targets.empty()) throw ValidationError("--data needs --targets");
        const csv::Table table = csv::read_file(sim_data);
        harness::TableSource ts{csv::to_dataset(table, sim_targets, false), sim_sample};
        if (ts.table.y.censored_count() != 0)
          throw ValidationError("--data must be fully observed; its censored cells have no ground truth");
        m = ts.table.m();
        source = std::move(ts);
      } else {
        harness::GeneratorSpec g;
        g.m = sim_m;
        g.d = sim_d;
        g.n = sim_n;
        g.beta = sim_beta;
        try {
          g.coef = harness::random_coefficients(sim_m, sim_d, sim_coupling,
                                                harness::mix_seed(sim_seed, 0x636f6566));
        } catch (const std::invalid_argument& e) {
          throw ValidationError(e.what());
        }
        source = std::move(g);
      }
      std::vector<std::size_t> rows(m);
      std::iota(rows.begin(), rows.end(), 0);
      std::vector<harness::CensoringScenario> scenarios;
      for (double rate : sim_rates) scenarios.push_back({rate, rows, parse_side(sim_side), 0});
      const auto reports = harness::benchmark_compare(source, scenarios, options);
      out << (sim_format == "json" ? harness::format_json(reports) : harness::format_tsv(reports));
    } else if (*rt_cmd) {
      if (rt.sweeps < 1) throw ValidationError("--sweeps must be at least 1");
      if (rt_grid.empty()) throw ValidationError("--n-grid must not be empty");
      for (std::size_t n : rt_grid)
        if (n < 2) throw ValidationError("every grid size must be at least 2");
      rt.n_grid = rt_grid;
      rt.config.lambda_reg = rt_flags.lambda;
      out << harness::format_runtime_tsv(harness::runtime_probe(rt));
    }
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitParse;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitParse;
  }
  return kExitOk;
}

}  // namespace mttm
