// Serial reference kernels against their OpenMP counterparts.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "stsn/core/kernels.hpp"

namespace {

using stsn::Matrix;
namespace serial = stsn::kernels::serial;
namespace parallel = stsn::kernels::parallel;

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

template <auto Kernel>
void matmul(benchmark::State& state) {
  const auto n = state.range(0);
  const auto a = random_matrix(n, n, 1);
  const auto b = random_matrix(n, n, 2);
  Matrix out;
  for (auto _ : state) {
    Kernel(a, b, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * n * n * n);
}

template <auto Kernel>
void softmax(benchmark::State& state) {
  const auto n = state.range(0);
  const auto scores = random_matrix(n, n, 3);
  std::vector<std::uint8_t> mask(static_cast<size_t>(n), 1);
  mask.back() = 0;
  Matrix out;
  for (auto _ : state) {
    Kernel(scores, mask, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <auto Kernel>
void layer_norm(benchmark::State& state) {
  const auto n = state.range(0);
  const auto x = random_matrix(n, 768, 4);
  const stsn::RowVector gain = stsn::RowVector::Ones(768);
  const stsn::RowVector bias = stsn::RowVector::Zero(768);
  Matrix out, normalized;
  Eigen::VectorXd inv_std;
  for (auto _ : state) {
    Kernel(x, gain, bias, 1e-5, out, normalized, inv_std);
    benchmark::DoNotOptimize(out.data());
  }
}

template <auto Kernel>
void max_pool(benchmark::State& state) {
  const auto n = state.range(0);
  const auto x = random_matrix(2 * n, 768, 5);
  std::vector<int> groups(static_cast<size_t>(2 * n));
  for (size_t i = 0; i < groups.size(); ++i) groups[i] = static_cast<int>(i / 2);
  Matrix out;
  stsn::IndexMatrix argmax;
  for (auto _ : state) {
    Kernel(x, groups, static_cast<int>(n), out, argmax);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(matmul<serial::matmul>)->Name("matmul/serial")->Arg(64)->Arg(256);
BENCHMARK(matmul<parallel::matmul>)->Name("matmul/parallel")->Arg(64)->Arg(256);
BENCHMARK(softmax<serial::softmax_rows>)->Name("softmax/serial")->Arg(128)->Arg(512);
BENCHMARK(softmax<parallel::softmax_rows>)->Name("softmax/parallel")->Arg(128)->Arg(512);
BENCHMARK(layer_norm<serial::layer_norm>)->Name("layer_norm/serial")->Arg(128);
BENCHMARK(layer_norm<parallel::layer_norm>)->Name("layer_norm/parallel")->Arg(128);
BENCHMARK(max_pool<serial::max_pool_groups>)->Name("max_pool/serial")->Arg(128);
BENCHMARK(max_pool<parallel::max_pool_groups>)->Name("max_pool/parallel")->Arg(128);

BENCHMARK_MAIN();
