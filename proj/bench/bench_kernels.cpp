// Serial reference vs OpenMP kernels at survey scale (agents x adjectives).

#include <random>

#include <benchmark/benchmark.h>

#include "lexpsy/factors.hpp"
#include "lexpsy/kernels.hpp"

using lexpsy::kernels::IndexPair;
using lexpsy::kernels::Matrix;

namespace {

constexpr Eigen::Index kAgents = 310;
constexpr Eigen::Index kItems = 1710;

Matrix ratings() {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> v(1, 9);
  std::bernoulli_distribution masked(0.01);
  Matrix m(kAgents, kItems);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = masked(rng) ? std::nan("") : v(rng);
  return m;
}

const Matrix& data() {
  static const Matrix m = ratings();
  return m;
}

template <auto Fn>
void rows(benchmark::State& state) {
  std::vector<char> flags;
  for (auto _ : state) {
    Matrix m = data();
    Fn(m, flags);
    benchmark::DoNotOptimize(m.data());
  }
}

template <auto Fn>
void columns(benchmark::State& state) {
  Matrix within = data();
  std::vector<char> flags;
  lexpsy::kernels::serial::standardize_rows(within, flags);
  for (auto _ : state) {
    Matrix m = within;
    Fn(m, flags);
    benchmark::DoNotOptimize(m.data());
  }
}

template <auto Fn>
void pairs(benchmark::State& state) {
  std::vector<IndexPair> p;
  for (Eigen::Index i = 0; i + 1 < kItems; i += 2) p.emplace_back(i, i + 1);
  Matrix out;
  for (auto _ : state) {
    Fn(data(), p, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <auto Fn>
void scores(benchmark::State& state) {
  Matrix w = Matrix::Random(kItems, 6);
  Matrix z = data().unaryExpr([](double x) { return std::isnan(x) ? 0.0 : x; });
  for (auto _ : state) benchmark::DoNotOptimize(Fn(z, w).data());
}

void ipsatise(benchmark::State& state) {
  lexpsy::survey::ResponseMatrix m;
  m.values = data();
  for (Eigen::Index i = 0; i < kAgents; ++i) m.agent_ids.push_back(i);
  for (Eigen::Index j = 0; j < kItems; ++j) m.item_ids.push_back("a" + std::to_string(j));
  const bool parallel = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(lexpsy::factors::ipsatise(m, parallel).values.data());
}

namespace serial = lexpsy::kernels::serial;
namespace omp = lexpsy::kernels::omp;

BENCHMARK(rows<serial::standardize_rows>)->Name("standardize_rows/serial")->Unit(benchmark::kMicrosecond);
BENCHMARK(rows<omp::standardize_rows>)->Name("standardize_rows/omp")->Unit(benchmark::kMicrosecond);
BENCHMARK(columns<serial::impute_standardize_columns>)->Name("impute_standardize_columns/serial")->Unit(benchmark::kMicrosecond);
BENCHMARK(columns<omp::impute_standardize_columns>)->Name("impute_standardize_columns/omp")->Unit(benchmark::kMicrosecond);
BENCHMARK(pairs<serial::pair_consistency>)->Name("pair_consistency/serial")->Unit(benchmark::kMicrosecond);
BENCHMARK(pairs<omp::pair_consistency>)->Name("pair_consistency/omp")->Unit(benchmark::kMicrosecond);
BENCHMARK(scores<serial::weighted_sums>)->Name("weighted_sums/serial")->Unit(benchmark::kMicrosecond);
BENCHMARK(scores<omp::weighted_sums>)->Name("weighted_sums/omp")->Unit(benchmark::kMicrosecond);
BENCHMARK(ipsatise)->Name("ipsatise")->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
