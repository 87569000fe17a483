// Serial reference loops against the OpenMP kernels on a 128^3 grid.
// QSM_THREADS (or OMP_NUM_THREADS) sets the worker count for the parallel side.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "qsm/kernels.hpp"
#include "qsm/morphology.hpp"
#include "qsm/threads.hpp"

namespace {

using namespace qsm;

const Dims kDims{128, 128, 128};
const Spacing kSpacing{1.0, 1.0, 1.0};

struct Data {
    std::vector<double> a, b, out;
    std::vector<std::uint8_t> mask;
    std::vector<kernels::Offset> ball = ball_offsets(4.0, kSpacing);
    std::vector<double> taps = {0.05, 0.1, 0.2, 0.3, 0.2, 0.1, 0.05};

    Data() : a(kDims.size()), b(kDims.size()), out(kDims.size()), mask(kDims.size()) {
        std::mt19937_64 rng(1);
        std::uniform_real_distribution<double> u(-1, 1);
        for (auto& v : a) v = u(rng);
        for (auto& v : b) v = u(rng);
        for (std::size_t z = 0; z < kDims.nz; ++z)
            for (std::size_t y = 0; y < kDims.ny; ++y)
                for (std::size_t x = 0; x < kDims.nx; ++x) {
                    const double dx = x - 64.0, dy = y - 64.0, dz = z - 64.0;
                    mask[kDims.index(x, y, z)] = dx * dx + dy * dy + dz * dz < 55.0 * 55.0;
                }
    }
};

Data& data() {
    static Data d;
    return d;
}

#define QSM_BENCH_PAIR(name, body)                                                     \
    void BM_serial_##name(benchmark::State& state) {                                   \
        namespace K = kernels::serial;                                                 \
        auto& d = data();                                                              \
        for (auto _ : state) { body; }                                                 \
        state.SetItemsProcessed(state.iterations() * int64_t(kDims.size()));           \
    }                                                                                  \
    void BM_parallel_##name(benchmark::State& state) {                                 \
        namespace K = kernels::parallel;                                               \
        auto& d = data();                                                              \
        for (auto _ : state) { body; }                                                 \
        state.SetItemsProcessed(state.iterations() * int64_t(kDims.size()));           \
    }                                                                                  \
    BENCHMARK(BM_serial_##name)->Unit(benchmark::kMillisecond)->UseRealTime();        \
    BENCHMARK(BM_parallel_##name)->Unit(benchmark::kMillisecond)->UseRealTime();

QSM_BENCH_PAIR(dot, benchmark::DoNotOptimize(K::dot(d.a, d.b)))
QSM_BENCH_PAIR(add_scaled, K::add_scaled(d.a, 0.5, d.b, d.out); benchmark::ClobberMemory())
QSM_BENCH_PAIR(forward_difference, K::forward_difference(d.a, kDims, 2, d.out))
QSM_BENCH_PAIR(laplacian7, K::laplacian7(d.a, kDims, kSpacing, d.out))
QSM_BENCH_PAIR(convolve_axis, K::convolve_axis(d.a, kDims, 1, d.taps, kernels::Padding::replicate, d.out))

void BM_serial_erode(benchmark::State& state) {
    auto& d = data();
    std::vector<std::uint8_t> out(kDims.size());
    for (auto _ : state) kernels::serial::erode(d.mask, kDims, d.ball, out);
}
void BM_parallel_erode(benchmark::State& state) {
    auto& d = data();
    std::vector<std::uint8_t> out(kDims.size());
    for (auto _ : state) kernels::parallel::erode(d.mask, kDims, d.ball, out);
}
BENCHMARK(BM_serial_erode)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_parallel_erode)->Unit(benchmark::kMillisecond)->UseRealTime();

} // namespace

int main(int argc, char** argv) {
    const int threads = qsm::configure_threads_from_env();
    benchmark::AddCustomContext("omp_threads", std::to_string(threads));
    benchmark::Initialize(&argc, argv);
    if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
