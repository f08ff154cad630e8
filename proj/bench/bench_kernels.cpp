#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ldg/common.hpp"
#include "ldg/energy.hpp"
#include "ldg/inner.hpp"
#include "ldg/lifting.hpp"
#include "ldg/reference.hpp"

using namespace ldg;

namespace {

// median of `reps` wall times in milliseconds
template <class F>
double time_ms(int reps, F&& f) {
  std::vector<double> t(reps);
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    t[r] = std::chrono::duration<double, std::milli>(t1 - t0).count();
  }
  std::sort(t.begin(), t.end());
  return t[reps / 2];
}

void set_threads(int n) {
#ifdef _OPENMP
  omp_set_num_threads(n);
#else
  (void)n;
#endif
}

void row(const char* kernel, int cells, double serial_ms, double other_ms,
         const char* other_label) {
  std::printf("%-18s %6d %12.3f %12.3f %9.2fx  (%s)\n", kernel, cells,
              serial_ms, other_ms, serial_ms / other_ms, other_label);
}

volatile double sink = 0.0;  // keeps results alive

}  // namespace

int main(int argc, char** argv) {
  int reps = 3;
  std::vector<int> sizes = {8, 16};
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--reps" && i + 1 < argc) {
      reps = std::atoi(argv[++i]);
    } else if (arg == "--sizes" && i + 1 < argc) {
      sizes.clear();
      const std::string list = argv[++i];
      std::size_t start = 0;
      while (start < list.size()) {
        std::size_t comma = list.find(',', start);
        if (comma == std::string::npos) comma = list.size();
        sizes.push_back(std::atoi(list.substr(start, comma - start).c_str()));
        start = comma + 1;
      }
    } else {
      std::printf("usage: %s [--reps N] [--sizes 8,16,32]\n", argv[0]);
      return 2;
    }
  }

  apply_thread_cap();
  const int threads = configured_threads();
  std::printf("threads: %d, reps: %d (median reported)\n\n", threads, reps);
  std::printf("%-18s %6s %12s %12s %10s\n", "kernel", "cells", "ref/1thr ms",
              "kernel ms", "ratio");

  for (int n : sizes) {
    const Mesh mesh = Mesh::structured(CellKind::Quad, n, n, 0, 0, 1, 1);
    const DGSpace s(mesh, 2);
    const LiftingAssembly a(s, 2, 2, Skeleton::Interior);
    EnergyParams p;
    p.mu = 1.0;
    p.metric = metric_cylinder();
    Rng rng(1);
    const DGField u = random_field(s, 3, rng);
    const DGField v = random_field(s, 3, rng);
    const int cells = mesh.num_elements();

    // brute-force reference vs cached tables (both single threaded)
    set_threads(1);
    const double t_ref =
        time_ms(reps, [&] { sink = ref::h2_inner(u, v, H2Mode::Full); });
    const double t_cached =
        time_ms(reps, [&] { sink = h2_inner(u, v, H2Mode::Full); });
    row("h2_inner", cells, t_ref, t_cached, "cached tables");

    // threaded kernels against their own single-thread runs
    const double g1 = time_ms(reps, [&] {
      sink = gram_h2(s, H2Mode::Semi, Skeleton::Interior).norm();
    });
    const double a1 = time_ms(reps, [&] { sink = assemble_ah(p, a).constant; });
    const double h1 =
        time_ms(reps, [&] { sink = discrete_hessian(a, v).vals[0](0, 0); });
    const double e1 = time_ms(reps, [&] { sink = energy_Eh(p, a, v).total; });

    set_threads(threads);
    const double gN = time_ms(reps, [&] {
      sink = gram_h2(s, H2Mode::Semi, Skeleton::Interior).norm();
    });
    const double aN = time_ms(reps, [&] { sink = assemble_ah(p, a).constant; });
    const double hN =
        time_ms(reps, [&] { sink = discrete_hessian(a, v).vals[0](0, 0); });
    const double eN = time_ms(reps, [&] { sink = energy_Eh(p, a, v).total; });

    row("gram_h2", cells, g1, gN, "threaded");
    row("assemble_ah", cells, a1, aN, "threaded");
    row("discrete_hessian", cells, h1, hN, "threaded");
    row("energy_Eh", cells, e1, eN, "threaded");
    std::printf("\n");
  }
  return 0;
}
