// Serial reference vs OpenMP kernels, plus one full ascent sweep.

#include <benchmark/benchmark.h>

#include "mttm/fit.hpp"
#include "mttm/harness.hpp"
#include "mttm/kernels.hpp"

namespace {

using namespace mttm;

struct ResidualInputs {
  Eigen::MatrixXd resid, var;
  Eigen::VectorXd weight;
  explicit ResidualInputs(Eigen::Index n)
      : resid(Eigen::MatrixXd::Random(4, n)),
        var(Eigen::MatrixXd::Random(4, n).cwiseAbs()),
        weight(Eigen::VectorXd::Constant(4, 1.5)) {}
};

template <double (*Kernel)(const Eigen::MatrixXd&, const Eigen::MatrixXd&, const Eigen::VectorXd&)>
void BM_expected_sq_residual(benchmark::State& state) {
  const ResidualInputs in(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(in.resid, in.var, in.weight));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <void (*Kernel)(const Eigen::MatrixXd&, const Eigen::VectorXd&, Eigen::MatrixXd&, Eigen::VectorXd&)>
void BM_gram(benchmark::State& state) {
  const Eigen::MatrixXd design = Eigen::MatrixXd::Random(state.range(0), 7);
  const Eigen::VectorXd target = Eigen::VectorXd::Random(state.range(0));
  Eigen::MatrixXd g;
  Eigen::VectorXd rhs;
  for (auto _ : state) {
    Kernel(design, target, g, rhs);
    benchmark::DoNotOptimize(g.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_sweep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto coef = harness::random_coefficients(4, 3, 0.5, 1);
  const auto syn = harness::generate_synthetic(4, 3, n, coef, 4.0, 2);
  const auto data = harness::apply_censoring(with_intercept(syn.data), {0.2, {0, 1, 2, 3}, harness::CensorSide::Left, 0});
  AscentWorkspace ws = AscentWorkspace::initialize(data.data, FitConfig{});
  for (auto _ : state) {
    ws.q_sweep();
    ws.theta_update();
    benchmark::DoNotOptimize(ws.objective());
  }
}

}  // namespace

BENCHMARK(BM_expected_sq_residual<kernels::serial::expected_sq_residual>)->Name("residual/serial")->RangeMultiplier(10)->Range(100, 1000000);
BENCHMARK(BM_expected_sq_residual<kernels::parallel::expected_sq_residual>)->Name("residual/parallel")->RangeMultiplier(10)->Range(100, 1000000);
BENCHMARK(BM_gram<kernels::serial::gram>)->Name("gram/serial")->RangeMultiplier(10)->Range(100, 1000000);
BENCHMARK(BM_gram<kernels::parallel::gram>)->Name("gram/parallel")->RangeMultiplier(10)->Range(100, 1000000);
BENCHMARK(BM_sweep)->Name("sweep")->RangeMultiplier(10)->Range(100, 10000);

BENCHMARK_MAIN();
