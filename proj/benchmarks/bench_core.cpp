// benchmarks/bench_core.cpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include <benchmark/benchmark.h>

#include <random>

#include "hadua/graph.hpp"

namespace {

hadua::Tensor random_tensor(std::vector<std::size_t> shape, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(-1, 1);
  hadua::Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = dist(gen);
  return t;
}

void BM_matmul_forward_backward(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  hadua::Tensor a = random_tensor({n, n}, 1);
  hadua::Tensor b = random_tensor({n, n}, 2);
  a.set_requires_grad(true);
  b.set_requires_grad(true);
  for (auto _ : state) {
    hadua::Graph g;
    auto va = g.input(a);
    auto vb = g.input(b);
    auto y = g.reduce_sum(g.matmul(va, vb));
    g.backward(y);
    benchmark::DoNotOptimize(g.grad(va)[0]);
  }
}
BENCHMARK(BM_matmul_forward_backward)->Arg(32)->Arg(64)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
