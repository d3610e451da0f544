#include "psg/kernels.hpp"

#include <algorithm>
#include <limits>

namespace psg::kernels {

namespace {

inline void first_visit_row(const RealMatrix& p, const IntMatrix& w, int n,
                            int k, int i, std::vector<double>& f) {
  const auto slice = [n](int kk) {
    return static_cast<std::size_t>(kk - 1) * n * n;
  };
  double* out = f.data() + slice(k) + static_cast<std::size_t>(i) * n;
  for (int j = 0; j < n; ++j) {
    double v = w(i, j) == k ? p(i, j) : 0.0;
    for (int h = 0; h < n; ++h) {
      if (h == j) continue;
      const double pih = p(i, h);
      const int step = w(i, h);
      if (pih == 0.0 || step >= k) continue;
      v += pih * f[slice(k - step) + static_cast<std::size_t>(h) * n + j];
    }
    out[j] = v;
  }
}

inline void payoff_pair(const std::vector<double>& f, int n, int k_max,
                        const RealMatrix& hv, double penalty, int t_max, int i,
                        int j, std::vector<double>& z) {
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  const std::size_t cell = static_cast<std::size_t>(i) * n + j;
  double cum = 0.0;
  double total = 0.0;
  for (int t = 1; t <= t_max; ++t) {
    const double ft = t <= k_max ? f[(t - 1) * nn + cell] : 0.0;
    cum += ft;
    const double h = hv(j, t);
    total += (h - penalty) * ft + h * (1.0 - cum);
    z[(t - 1) * nn + cell] = total;
  }
}

}  // namespace

std::vector<double> first_visit_serial(const RealMatrix& p,
                                       const IntMatrix& weights, int k_max) {
  const int n = static_cast<int>(p.rows());
  std::vector<double> f(static_cast<std::size_t>(k_max) * n * n, 0.0);
  for (int k = 1; k <= k_max; ++k)
    for (int i = 0; i < n; ++i) first_visit_row(p, weights, n, k, i, f);
  return f;
}

std::vector<double> first_visit_parallel(const RealMatrix& p,
                                         const IntMatrix& weights, int k_max) {
  const int n = static_cast<int>(p.rows());
  std::vector<double> f(static_cast<std::size_t>(k_max) * n * n, 0.0);
  // One team for all k; the barrier closing each omp for orders the levels.
#pragma omp parallel if (n >= 16)
  for (int k = 1; k <= k_max; ++k) {
#pragma omp for schedule(static)
    for (int i = 0; i < n; ++i) first_visit_row(p, weights, n, k, i, f);
  }
  return f;
}

std::vector<double> payoff_tensor_serial(const std::vector<double>& first_visit,
                                         int n, const RealMatrix& utility_values,
                                         double penalty, int t_max) {
  const int k_max = static_cast<int>(first_visit.size() / (static_cast<std::size_t>(n) * n));
  std::vector<double> z(static_cast<std::size_t>(t_max) * n * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      payoff_pair(first_visit, n, k_max, utility_values, penalty, t_max, i, j, z);
  return z;
}

std::vector<double> payoff_tensor_parallel(
    const std::vector<double>& first_visit, int n,
    const RealMatrix& utility_values, double penalty, int t_max) {
  const int k_max = static_cast<int>(first_visit.size() / (static_cast<std::size_t>(n) * n));
  std::vector<double> z(static_cast<std::size_t>(t_max) * n * n, 0.0);
  const int pairs = n * n;
#pragma omp parallel for schedule(dynamic, 1)
  for (int c = 0; c < pairs; ++c)
    payoff_pair(first_visit, n, k_max, utility_values, penalty, t_max, c / n,
                c % n, z);
  return z;
}

void minimax_closure_serial(RealMatrix& dist) {
  const std::size_t v = dist.rows();
  constexpr double inf = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < v; ++k) {
    for (std::size_t i = 0; i < v; ++i) {
      const double dik = dist(i, k);
      if (dik == inf) continue;
      for (std::size_t j = 0; j < v; ++j) {
        const double cand = std::max(dik, dist(k, j));
        if (cand < dist(i, j)) dist(i, j) = cand;
      }
    }
  }
}

void minimax_closure_parallel(RealMatrix& dist) {
  const long v = static_cast<long>(dist.rows());
  constexpr double inf = std::numeric_limits<double>::infinity();
  for (long k = 0; k < v; ++k) {
    // Row k is invariant during pass k, so rows can be relaxed concurrently.
    const double* row_k = dist.data().data() + k * v;
#pragma omp parallel for schedule(static) if (v >= 64)
    for (long i = 0; i < v; ++i) {
      double* row_i = dist.data().data() + i * v;
      const double dik = row_i[k];
      if (dik == inf) continue;
      for (long j = 0; j < v; ++j) {
        const double cand = std::max(dik, row_k[j]);
        if (cand < row_i[j]) row_i[j] = cand;
      }
    }
  }
}

}  // namespace psg::kernels
