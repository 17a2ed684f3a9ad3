#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "capcal/calibration.hpp"
#include "capcal/models.hpp"
#include "capcal/synthgen.hpp"
#include "capcal/vzero.hpp"

namespace {

namespace models = capcal::models;
namespace calibration = capcal::calibration;
namespace synthgen = capcal::synthgen;

const models::IdealGeometry kSphere{30.9e-3};
const models::ModifiedGeometry kStepped{30.9e-3, 49.4e-3, 30e-6, 250e-9, 8e-9};
const calibration::PztMap kMap{87e-9, 69.31};

std::vector<double> v_grid(int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) {
    const double d = 20e-9 * std::pow(50.0, double(i) / (n - 1));
    v.push_back(kMap.v0_pzt - d / kMap.beta);
  }
  return v;
}

calibration::CapacitanceSeries noisy_series(int n) {
  const synthgen::IdealModel truth{kSphere, {193.9e-12, 2e-9}, -1.757e-12};
  return synthgen::gen_capacitance(truth, kMap, v_grid(n), {0.005, true, 1});
}

void BM_ModifiedCapacitance(benchmark::State& state) {
  double d = 20e-9;
  for (auto _ : state) {
    benchmark::DoNotOptimize(models::modified_capacitance(d, kStepped, {}));
    d = d < 1e-6 ? d * 1.001 : 20e-9;
  }
}
BENCHMARK(BM_ModifiedCapacitance);

void BM_SecondDerivative(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        models::capacitance_second_derivative(60e-9, kStepped));
  }
}
BENCHMARK(BM_SecondDerivative);

void BM_FitIdeal(benchmark::State& state) {
  const auto series = noisy_series(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        calibration::fit_ideal(series, kSphere, kMap, false));
  }
}
BENCHMARK(BM_FitIdeal)->Arg(100)->Arg(500);

void BM_FitModified(benchmark::State& state) {
  const synthgen::ModifiedModel truth{kStepped, {0.0, 0.0}, 1.0};
  const auto series =
      synthgen::gen_capacitance(truth, kMap, v_grid(500), {0.005, true, 1});
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        calibration::fit_modified(series, kStepped, kMap, true));
  }
}
BENCHMARK(BM_FitModified);

void BM_ConstancyTest(benchmark::State& state) {
  std::vector<double> d_grid;
  for (int i = 0; i < 500; ++i) d_grid.push_back(160e-9 + 1.2e-8 * i);
  const auto series = capcal::synthgen::gen_vzero(
      synthgen::ConstantProfile{15.29e-3}, d_grid, 0.13e-3, 0.31e-3, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(capcal::vzero::constancy_test(series));
  }
}
BENCHMARK(BM_ConstancyTest);

}  // namespace

BENCHMARK_MAIN();
