// Compares the OpenMP frame-parallel operators against the serial naive
// reference used as the test oracle.

#include "../tests/support/instances.hpp"
#include "../tests/support/reference.hpp"

#include "bpr/forward.hpp"
#include "bpr/metrics.hpp"

#include <benchmark/benchmark.h>

namespace {

inst::Blind make(int image_side, int frame_side, int step) {
    return inst::ptycho(image_side, frame_side, step, 7);
}

void bm_forward_parallel(benchmark::State& state) {
    auto b = make(static_cast<int>(state.range(0)), 16, 4);
    for (auto _ : state) benchmark::DoNotOptimize(bpr::forward(b.model, b.w, b.u));
}

void bm_forward_serial_reference(benchmark::State& state) {
    auto b = make(static_cast<int>(state.range(0)), 16, 4);
    for (auto _ : state) benchmark::DoNotOptimize(ref::forward(b.model, b.w, b.u));
}

void bm_adjoint_u_parallel(benchmark::State& state) {
    auto b = make(static_cast<int>(state.range(0)), 16, 4);
    auto z = bpr::forward(b.model, b.w, b.u);
    for (auto _ : state) benchmark::DoNotOptimize(bpr::adjoint_wrt_u(b.model, b.w, z));
}

void bm_prox_agm(benchmark::State& state) {
    auto b = make(static_cast<int>(state.range(0)), 16, 4);
    auto z = bpr::forward(b.model, b.w, b.u);
    bpr::Metric agm(bpr::MetricKind::AGM);
    for (auto _ : state) benchmark::DoNotOptimize(bpr::prox(agm, 1.0, z, b.f));
}

} // namespace

BENCHMARK(bm_forward_parallel)->Arg(32)->Arg(64);
BENCHMARK(bm_forward_serial_reference)->Arg(32);
BENCHMARK(bm_adjoint_u_parallel)->Arg(32)->Arg(64);
BENCHMARK(bm_prox_agm)->Arg(32)->Arg(64);

BENCHMARK_MAIN();
