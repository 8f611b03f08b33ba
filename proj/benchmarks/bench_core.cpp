#include "tdb/evolve.hpp"
#include "tdb/hosvd.hpp"
#include "tdb/state.hpp"
#include "tdb/tensor.hpp"

#include <benchmark/benchmark.h>

#include <memory>
#include <cstdint>
#include <random>

namespace {

using namespace tdb;

constexpr Index kRank = 10;

DenseTensor random_tensor(const Shape& dims, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    DenseTensor t(dims);
    for (double& x : t.values()) x = g(rng);
    return t;
}

// Random rank-(10,10,10) state on an N³ grid with unit weights.
TdbState random_state(Index n, std::mt19937_64& rng) {
    TdbState s;
    s.weights = std::make_shared<const ModeWeights>(ModeWeights::unit(Shape{n, n, n}));
    s.core = random_tensor({kRank, kRank, kRank}, rng);
    std::normal_distribution<double> g;
    for (int m = 0; m < 3; ++m) {
        Matrix a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kRank));
        for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
        s.bases.push_back(Eigen::HouseholderQR<Matrix>(a).householderQ() * Matrix::Identity(a.rows(), a.cols()));
    }
    return s;
}

void BM_TdbStep(benchmark::State& st) {
    const auto n = static_cast<Index>(st.range(0));
    std::mt19937_64 rng(7);
    const TdbState s = random_state(n, rng);
    const DenseTensor vdot = random_tensor({n, n, n}, rng);
    const DerivativeFn d = [&](double) { return vdot; };
    for (auto _ : st) benchmark::DoNotOptimize(step(s, d, 1e-3, Integrator::rk2));
    st.counters["S"] = static_cast<double>(n * n * n);
    st.SetComplexityN(static_cast<std::int64_t>(n * n * n));
}

void BM_Hosvd(benchmark::State& st) {
    const auto n = static_cast<Index>(st.range(0));
    std::mt19937_64 rng(7);
    const DenseTensor v = random_tensor({n, n, n}, rng);
    auto w = std::make_shared<const ModeWeights>(ModeWeights::unit(Shape{n, n, n}));
    for (auto _ : st) benchmark::DoNotOptimize(hosvd_truncate(v, w, {kRank, kRank, kRank}));
    st.counters["S"] = static_cast<double>(n * n * n);
    st.SetComplexityN(static_cast<std::int64_t>(n * n * n));
}

void BM_Reconstruct(benchmark::State& st) {
    const auto n = static_cast<Index>(st.range(0));
    std::mt19937_64 rng(7);
    const TdbState s = random_state(n, rng);
    for (auto _ : st) benchmark::DoNotOptimize(reconstruct(s));
    st.SetComplexityN(static_cast<std::int64_t>(n * n * n));
}

void BM_ModeProduct(benchmark::State& st) {
    const auto n = static_cast<Index>(st.range(0));
    std::mt19937_64 rng(7);
    const DenseTensor t = random_tensor({n, n, n}, rng);
    const Matrix a = Matrix::Random(static_cast<Eigen::Index>(kRank), static_cast<Eigen::Index>(n));
    for (auto _ : st) benchmark::DoNotOptimize(mode_product(t, a, 1));
    st.SetComplexityN(static_cast<std::int64_t>(n * n * n));
}

} // namespace

BENCHMARK(BM_TdbStep)->Arg(32)->Arg(48)->Arg(64)->Arg(96)->Unit(benchmark::kMillisecond)->Complexity(benchmark::oN);
BENCHMARK(BM_Hosvd)->Arg(32)->Arg(48)->Arg(64)->Arg(96)->Unit(benchmark::kMillisecond)->Complexity();
BENCHMARK(BM_Reconstruct)->Arg(32)->Arg(64)->Arg(96)->Unit(benchmark::kMillisecond)->Complexity(benchmark::oN);
BENCHMARK(BM_ModeProduct)->Arg(32)->Arg(64)->Arg(96)->Unit(benchmark::kMillisecond)->Complexity(benchmark::oN);
BENCHMARK_MAIN();
