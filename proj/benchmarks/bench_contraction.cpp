#include "gwm/contraction.hpp"
#include "gwm/languages.hpp"
#include "gwm/model.hpp"
#include "gwm/rng.hpp"
#include "gwm/training.hpp"
#include "gwm/wpa.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace gwm;

Picture checkerboard(int rows, int cols) {
    Picture p(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) p.at(i, j) = (i + j) % 2 ? 'b' : 'a';
    return p;
}

void BM_Contract_BoundaryStep(benchmark::State& state) {
    // the dominant kernel of a sweep over height-4 pictures at dim 6
    Rng rng(1);
    DenseTensor boundary({6, 6, 6, 6, 6});
    DenseTensor site({6, 6, 6, 6});
    for (std::size_t i = 0; i < boundary.size(); ++i) boundary[i] = rng.normal();
    for (std::size_t i = 0; i < site.size(); ++i) site[i] = rng.normal();
    for (auto _ : state) {
        benchmark::DoNotOptimize(contract(boundary, site, {{0, 0}, {4, 1}}));
    }
}
BENCHMARK(BM_Contract_BoundaryStep);

void BM_Evaluate(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const int dim = static_cast<int>(state.range(1));
    const GwmModel m = random_init(dim, {'a', 'b'}, 0.4, 7);
    const Picture p = checkerboard(side, side);
    for (auto _ : state) benchmark::DoNotOptimize(evaluate(m, p));
}
BENCHMARK(BM_Evaluate)->Args({4, 6})->Args({5, 6})->Args({6, 6});

void BM_Gradient(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const int dim = static_cast<int>(state.range(1));
    const GwmModel m = random_init(dim, {'a', 'b'}, 0.4, 7);
    const Picture p = checkerboard(side, side);
    for (auto _ : state) benchmark::DoNotOptimize(gradient(m, p));
}
BENCHMARK(BM_Gradient)->Args({4, 6})->Args({5, 6});

void BM_Gradient_Wide(benchmark::State& state) {
    // shifting-bits geometry: short and wide at dim 10
    const GwmModel m = random_init(10, {'a', 'b'}, 0.2, 7);
    const Picture p = checkerboard(2, static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(gradient(m, p));
}
BENCHMARK(BM_Gradient_Wide)->Arg(10)->Arg(15);

void BM_WpaBruteForce(benchmark::State& state) {
    const Wpa a = bars_stripes_automaton();
    const Picture p = checkerboard(4, 4);
    for (auto _ : state) benchmark::DoNotOptimize(evaluate_bruteforce(a, p));
}
BENCHMARK(BM_WpaBruteForce);

void BM_MseBatch(benchmark::State& state) {
    const GwmModel m = random_init(6, {'a', 'b'}, 0.4, 3);
    const Dataset ds = generate_dataset(LanguageKind::BarsStripes, {{4, 4}}, 100, 0.5, 5);
    for (auto _ : state) benchmark::DoNotOptimize(mse_loss(m, ds.examples));
}
BENCHMARK(BM_MseBatch);

}  // namespace

BENCHMARK_MAIN();
