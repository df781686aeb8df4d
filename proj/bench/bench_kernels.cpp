// Compares the serial reference kernels against the OpenMP paths.
// The two must be bit-identical; this tool reports the speed difference.

#include "skewprune/kernels.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>

using namespace skewprune;
using kernels::Exec;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm-up
    auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) fn();
    auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void row(const char* name, const std::function<void(Exec)>& fn, int reps) {
    const double serial = time_ms([&] { fn(Exec::Serial); }, reps);
    const double parallel = time_ms([&] { fn(Exec::Parallel); }, reps);
    std::printf("%-24s %10.3f ms %10.3f ms %8.2fx\n", name, serial, parallel,
                serial / parallel);
}

}  // namespace

int main() {
    std::mt19937 rng(1);
    std::printf("threads: %d\n", kernels::thread_count());
    std::printf("%-24s %13s %13s %9s\n", "kernel", "serial", "openmp", "speedup");

    Tensor cx = random_uniform({4, 16, 64, 64}, rng);
    Tensor cw = random_uniform({32, 16, 3, 3}, rng);
    Tensor cb = random_uniform({32}, rng);
    row("conv2d 16->32 @64", [&](Exec e) { kernels::conv2d_forward(cx, cw, cb, 1, 1, e); }, 3);

    Tensor go = random_uniform({4, 32, 64, 64}, rng);
    row("conv2d grad input", [&](Exec e) { kernels::conv2d_backward_input(go, cw, 1, 1, 64, 64, e); }, 3);
    row("conv2d grad weight", [&](Exec e) { kernels::conv2d_backward_weight(go, cx, 1, 1, 3, 3, e); }, 3);

    Tensor lx = random_uniform({64, 1024}, rng);
    Tensor lw = random_uniform({512, 1024}, rng);
    Tensor lb = random_uniform({512}, rng);
    row("linear 1024->512", [&](Exec e) { kernels::linear_forward(lx, lw, lb, e); }, 5);

    Tensor ba = random_uniform({8, 128, 64}, rng);
    Tensor bb = random_uniform({8, 64, 128}, rng);
    row("bmm 8x128x64x128", [&](Exec e) { kernels::bmm(ba, bb, false, e); }, 5);

    Tensor px = random_uniform({8, 32, 64, 64}, rng);
    row("maxpool2d 2x2", [&](Exec e) { kernels::maxpool2d_forward(px, 2, 2, nullptr, e); }, 5);
    return 0;
}
