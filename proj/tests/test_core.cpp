#include <doctest.h>

#include <random>

#include "mttm/core.hpp"
#include "mttm/model_io.hpp"
#include "mttm/truncnorm.hpp"
#include "oracles.hpp"

using namespace mttm;

namespace {

// 2 x 6 toy table with five hidden cells.
Dataset toy_table() {
  Dataset d;
  d.x = Eigen::MatrixXd::Ones(6, 1);
  d.y = TargetMatrix(2, 6);
  const double vals[2][6] = {{0, 0, 0, 1.5, 2.0, 0.7}, {0.3, 0, 1.1, 0.4, 0, 2.2}};
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t i = 0; i < 6; ++i) d.y(k, i) = Observed{vals[k][i]};
  for (auto [k, i] : {std::pair{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 4}})
    d.y(static_cast<std::size_t>(k), static_cast<std::size_t>(i)) = Censored{CensoringBound::left(0.1)};
  d.target_names = {"FC", "TC"};
  d.feature_names = {"x"};
  return d;
}

bool has_message(const std::vector<std::string>& list, const std::string& needle) {
  for (const auto& s : list)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("toy table partitions into five hidden and seven visible cells") {
  const Dataset d = toy_table();
  const ValidationResult r = dataset_validate(d);
  CHECK(r.ok());
  CHECK(r.hidden == 5);
  CHECK(r.visible == 7);
  const auto hidden = d.hidden_entries();
  const std::vector<EntryIndex> expected{{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 4}};
  CHECK(hidden == expected);
  CHECK(d.visible_entries().size() == 7);
}

TEST_CASE("validation reports violations") {
  Dataset empty;
  empty.y = TargetMatrix(1, 0);
  empty.x.resize(0, 1);
  CHECK(has_message(dataset_validate(empty).errors, "n >= 1 required"));

  Dataset degenerate = toy_table();
  degenerate.y(1, 3) = Censored{CensoringBound{3.0, 3.0}};
  CHECK(has_message(dataset_validate(degenerate).errors, "degenerate bound"));
  CHECK_THROWS_AS(require_valid(degenerate), ValidationError);

  Dataset nonfinite = toy_table();
  nonfinite.x(2, 0) = std::nan("");
  CHECK_FALSE(dataset_validate(nonfinite).ok());

  Dataset mismatch = toy_table();
  mismatch.x = Eigen::MatrixXd::Ones(5, 1);
  CHECK_FALSE(dataset_validate(mismatch).ok());

  Dataset all_hidden = toy_table();
  for (std::size_t i = 0; i < 6; ++i) all_hidden.y(0, i) = Censored{CensoringBound::left(1.0)};
  const auto r = dataset_validate(all_hidden);
  CHECK(r.ok());
  CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("partition property on random tables") {
  std::mt19937_64 rng(3);
  for (int c = 0; c < 50; ++c) {
    const Dataset d = oracle::random_dataset(rng, 1 + c % 4, 3 + c, c % 3, 0.4);
    std::vector<int> seen(d.m() * d.n(), 0);
    for (const auto& e : d.visible_entries()) seen[e.k * d.n() + e.i] += 1;
    for (const auto& e : d.hidden_entries()) seen[e.k * d.n() + e.i] += 1;
    for (int s : seen) CHECK(s == 1);
  }
}

TEST_CASE("bound fill and containment") {
  CHECK(bound_fill(CensoringBound::left(2.0)) == 2.0);
  CHECK(bound_fill(CensoringBound::right(-1.0)) == -1.0);
  CHECK(bound_fill(CensoringBound::interval(1.0, 3.0)) == 2.0);
  CHECK(CensoringBound::left(1.0).strictly_contains(0.5));
  CHECK_FALSE(CensoringBound::left(1.0).strictly_contains(1.0));
  CHECK_FALSE(CensoringBound{1.0, 1.0}.valid());
  CHECK_FALSE(CensoringBound{-kInf, -kInf}.valid());
}

TEST_CASE("intercept column") {
  const Dataset d = with_intercept(toy_table());
  CHECK(d.d() == 2);
  CHECK(d.feature_names.back() == kInterceptName);
  CHECK(d.x.col(1).isOnes());
}

TEST_CASE("coupling matrix layout") {
  ModelParams p = ModelParams::zeros(3, 1);
  p.a << 0.1, 0.2,  // a_1 over targets 2, 3
      0.3, 0.4,     // a_2 over targets 1, 3
      0.5, 0.6;     // a_3 over targets 1, 2
  const Eigen::MatrixXd c = p.coupling_matrix();
  CHECK(c.diagonal().isOnes());
  CHECK(c(0, 1) == -0.1);
  CHECK(c(0, 2) == -0.2);
  CHECK(c(1, 0) == -0.3);
  CHECK(c(1, 2) == -0.4);
  CHECK(c(2, 0) == -0.5);
  CHECK(c(2, 1) == -0.6);
  CHECK(p.coupling(2, 2) == 0.0);
}

TEST_CASE("variational state caches truncated-normal moments") {
  const Dataset d = toy_table();
  VariationalState q = VariationalState::from_dataset(d, 0.7);
  CHECK(q(0, 3).mean == 1.5);
  CHECK(q(0, 3).second_moment == 2.25);
  CHECK_FALSE(q(0, 3).censored);
  CHECK(q(0, 0).censored);
  CHECK(q(0, 0).mean < 0.1);
  const auto& e = q.set_truncated_normal(1, 4, -0.4, 0.25);
  CHECK(e.mean == doctest::Approx(tn::mean(-0.4, 0.25, CensoringBound::left(0.1))).epsilon(1e-15));
  CHECK(q.max_cache_error() <= 1e-12);
  CHECK_THROWS_AS(q.set_truncated_normal(0, 3, 0.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(q.set_truncated_normal(1, 4, 0.0, 0.0), std::domain_error);
}

TEST_CASE("model document round trip is bit exact") {
  std::mt19937_64 rng(5);
  for (int c = 0; c < 20; ++c) {
    ModelDocument doc;
    doc.params = oracle::random_params(rng, 1 + c % 4, c % 3);
    doc.params.beta = std::ldexp(doc.params.beta, c - 10);
    for (std::size_t k = 0; k < doc.params.m(); ++k) doc.target_names.push_back("t\"" + std::to_string(k));
    for (std::size_t j = 0; j < doc.params.d(); ++j) doc.feature_names.push_back("f" + std::to_string(j));
    doc.lambda_reg = 1e-3;
    doc.report.objective_trace = {-12.5, -3.0 / 7.0};
    doc.report.sweeps_run = 2;
    doc.report.converged = true;
    doc.report.final_objective = -3.0 / 7.0;
    const ModelDocument back = model_from_json(model_to_json(doc));
    CHECK(back.params.a == doc.params.a);
    CHECK(back.params.w == doc.params.w);
    CHECK(back.params.beta == doc.params.beta);
    CHECK(back.target_names == doc.target_names);
    CHECK(back.feature_names == doc.feature_names);
    CHECK(back.lambda_reg == doc.lambda_reg);
    CHECK(back.report.objective_trace == doc.report.objective_trace);
    CHECK(back.report.converged);
    CHECK(back.report.final_objective == doc.report.final_objective);
  }
  CHECK_THROWS_AS(model_from_json("{\"m\": 2"), ParseError);
  CHECK_THROWS_AS(model_from_json(R"({"m": 2, "d": 0, "target_names": ["a"], "feature_names": [],
      "a": [], "w": [], "beta": 1, "lambda_reg": 0})"),
                  ParseError);
}
