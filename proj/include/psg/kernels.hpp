#pragma once

// Data-parallel inner loops. Every kernel has a serial reference with the
// identical per-element summation order, so both variants agree bit for bit.

#include <cstddef>
#include <vector>

#include "psg/matrix.hpp"

namespace psg::kernels {

/// F_k(i,j), k-major layout [(k-1)*n + i]*n + j. `weights` has 1 on the
/// diagonal (self-loop dwell).
std::vector<double> first_visit_serial(const RealMatrix& p,
                                       const IntMatrix& weights, int k_max);
std::vector<double> first_visit_parallel(const RealMatrix& p,
                                         const IntMatrix& weights, int k_max);

/// Cumulative payoff Z_{i,j,T} for T = 1..t_max, layout [(T-1)*n + i]*n + j.
/// `utility_values(j, t)` holds h_j(t) for t = 1..t_max (column 0 unused).
std::vector<double> payoff_tensor_serial(const std::vector<double>& first_visit,
                                         int n, const RealMatrix& utility_values,
                                         double penalty, int t_max);
std::vector<double> payoff_tensor_parallel(
    const std::vector<double>& first_visit, int n,
    const RealMatrix& utility_values, double penalty, int t_max);

/// All-pairs minimum-bottleneck closure in place. Entries hold arc weights
/// (+inf for no arc, including the diagonal); on return dist(u,v) is the
/// smallest achievable maximum arc weight over walks u -> v of length >= 1.
void minimax_closure_serial(RealMatrix& dist);
void minimax_closure_parallel(RealMatrix& dist);

}  // namespace psg::kernels
