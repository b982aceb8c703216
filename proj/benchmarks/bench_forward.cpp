#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "ph3/engine.hpp"
#include "ph3/toy_transformer.hpp"

namespace {

ph3::ToyTransformer& backend() {
  static ph3::ToyTransformer instance({2, 32, 4, 16, 1024, 0, 7});
  return instance;
}

ph3::LabelSpec two_classes() {
  ph3::LabelSpec labels;
  labels.classes.push_back({"a", {1}, {"t1"}});
  labels.classes.push_back({"b", {2}, {"t2"}});
  return labels;
}

std::vector<ph3::TokenId> random_input(std::size_t n) {
  std::mt19937_64 rng(n);
  std::uniform_int_distribution<ph3::TokenId> tok(0, 15);
  std::vector<ph3::TokenId> x(n);
  for (auto& t : x) t = tok(rng);
  return x;
}

void BM_ForwardFull(benchmark::State& state) {
  const auto x = random_input(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(backend().forward_full(x));
}
BENCHMARK(BM_ForwardFull)->Arg(16)->Arg(64)->Arg(256);

// single pass vs one forward per position
void BM_P3SinglePass(benchmark::State& state) {
  const auto x = random_input(16);
  const auto labels = two_classes();
  const auto m = static_cast<std::size_t>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(ph3::p3_matrix(backend(), x, m, labels));
}
BENCHMARK(BM_P3SinglePass)->Arg(4)->Arg(16)->Arg(64);

void BM_LoopedPsp(benchmark::State& state) {
  const auto x = random_input(16);
  const auto labels = two_classes();
  const auto m = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    for (std::size_t i = 0; i <= m; ++i)
      benchmark::DoNotOptimize(ph3::psp_scores(backend(), x, i, labels));
  }
}
BENCHMARK(BM_LoopedPsp)->Arg(4)->Arg(16)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
