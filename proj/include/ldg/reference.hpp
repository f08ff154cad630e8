#pragma once

#include "ldg/inner.hpp"
#include "ldg/space.hpp"

// Serial reference implementations. These recompute geometry and traces
// through the generic evaluate() path (no cached tables, no threads) and
// exist as independent oracles for the assembled kernels; the benchmark
// target compares them against the parallel versions.
namespace ldg::ref {

double h2_inner(const DGField& u, const DGField& v, H2Mode mode);

// brute-force volume inner product of the broken-Hessian matrices of two
// scalar fields (used by the lifting and energy cross-checks)
double hessian_inner(const DGField& u, const DGField& v);

}  // namespace ldg::ref
