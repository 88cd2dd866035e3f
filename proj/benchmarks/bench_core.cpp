#include <benchmark/benchmark.h>

#include "sosvi/estimators.hpp"
#include "sosvi/linalg.hpp"
#include "sosvi/optimizer.hpp"
#include "sosvi/oracles/fixtures.hpp"
#include "sosvi/oracles/random_instances.hpp"
#include "sosvi/var_family.hpp"

namespace {

using namespace sosvi;

void BM_StructuredMatvec(benchmark::State& state) {
  Rng rng(1);
  const auto d = static_cast<Index>(state.range(0));
  const auto h = oracles::random_spd_structured(d, state.range(1), rng);
  const Vector v = oracles::random_vector(d, rng);
  for (auto _ : state) benchmark::DoNotOptimize(est::structured_matvec(h, v));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_StructuredMatvec)->ArgsProduct({{100, 300, 1000, 3000}, {5}})->Complexity(benchmark::oN);

void BM_DenseMatvec(benchmark::State& state) {
  Rng rng(1);
  const auto d = static_cast<Index>(state.range(0));
  const Matrix h = oracles::random_spd_structured(d, 5, rng).densify();
  const Vector v = oracles::random_vector(d, rng);
  for (auto _ : state) benchmark::DoNotOptimize(Vector(h * v));
}
BENCHMARK(BM_DenseMatvec)->Arg(100)->Arg(300)->Arg(1000);

void BM_InvertStructured(benchmark::State& state) {
  Rng rng(2);
  const auto k = oracles::random_spd_structured(state.range(0), state.range(1), rng);
  for (auto _ : state) benchmark::DoNotOptimize(linalg::invert_structured(k));
}
BENCHMARK(BM_InvertStructured)->ArgsProduct({{20, 100, 300}, {5, 50}});

void BM_ConjugateGradient(benchmark::State& state) {
  Rng rng(3);
  const auto d = static_cast<Index>(state.range(0));
  const auto op = linalg::CurvatureOperator::from_structured(oracles::random_spd_structured(d, 5, rng));
  const Vector b = oracles::random_vector(d, rng);
  for (auto _ : state) benchmark::DoNotOptimize(linalg::conjugate_gradient(op, b, 1e-10, 2 * d));
}
BENCHMARK(BM_ConjugateGradient)->Arg(50)->Arg(500)->Arg(5000);

void BM_NeumannDeterministic(benchmark::State& state) {
  Rng rng(4);
  const auto d = static_cast<Index>(state.range(0));
  const auto k = oracles::random_spd_structured(d, 3, rng);
  const auto op = linalg::CurvatureOperator::from_structured(k);
  const Vector g = oracles::random_vector(d, rng);
  linalg::NeumannOptions opts;
  opts.c0 = 10.0 * linalg::power_iteration_norm([&](const Vector& v) { return k.apply(v); }, d);
  opts.tol = 0.0;
  opts.max_steps = 200;
  for (auto _ : state) benchmark::DoNotOptimize(linalg::neumann_inverse_apply([&] { return op; }, g, opts));
}
BENCHMARK(BM_NeumannDeterministic)->Arg(50)->Arg(500);

void BM_DenseNewtonStep(benchmark::State& state) {
  Rng rng(5);
  const auto d = static_cast<Index>(state.range(0));
  const opt::QuadraticObjective q(oracles::random_vector(d, rng), oracles::random_spd_structured(d, 5, rng));
  const Vector start = oracles::random_vector(d, rng);
  const opt::StepControl ctl;
  for (auto _ : state) benchmark::DoNotOptimize(opt::step_dense_newton(q, start, rng, ctl));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DenseNewtonStep)->RangeMultiplier(2)->Range(64, 512)->Complexity(benchmark::oNCubed);

void BM_GradientEstimate(benchmark::State& state) {
  const auto model = oracles::linreg_fixture();
  const family::GaussianMeanField fam(model.latent_dim());
  const Vector p = family::GaussianMeanField::make_params(Vector::Zero(5), Vector::Zero(5));
  est::EstimatorConfig cfg;
  cfg.grad_samples = static_cast<std::size_t>(state.range(0));
  Rng rng(6);
  for (auto _ : state) benchmark::DoNotOptimize(est::estimate_gradient(model, fam, p, cfg, rng));
}
BENCHMARK(BM_GradientEstimate)->Arg(1000)->Arg(10000);

void BM_StructuredHessianEstimate(benchmark::State& state) {
  const auto model = oracles::linreg_fixture();
  const family::GaussianMeanField fam(model.latent_dim());
  const Vector p = family::GaussianMeanField::make_params(Vector::Zero(5), Vector::Zero(5));
  est::EstimatorConfig cfg;
  cfg.hess_samples = static_cast<std::size_t>(state.range(0));
  Rng rng(7);
  for (auto _ : state) benchmark::DoNotOptimize(est::estimate_hessian_structured(model, fam, p, cfg, rng));
}
BENCHMARK(BM_StructuredHessianEstimate)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
