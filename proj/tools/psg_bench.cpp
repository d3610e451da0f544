// Wall-clock comparison of the serial and OpenMP kernels.

#include <chrono>
#include <cstdio>
#include <functional>
#include <limits>
#include <vector>

#include <omp.h>

#include "psg/instance.hpp"
#include "psg/kernels.hpp"
#include "psg/matrix.hpp"
#include "psg/rng.hpp"

using namespace psg;

namespace {

double seconds(const std::function<void()>& f, int reps) {
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

RealMatrix random_chain(int n, Rng& rng) {
  RealMatrix p(n, n, 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += p(i, j) = uniform01(rng) + 0.01;
    for (int j = 0; j < n; ++j) p(i, j) /= s;
  }
  return p;
}

void report(const char* name, double serial, double parallel) {
  std::printf("%-22s serial %9.4f s  parallel %9.4f s  speedup %5.2fx\n", name, serial, parallel,
              serial / parallel);
}

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());
  Rng rng(1);

  const int n = 40, k_max = 2000;
  const auto g = generate_random_instance(n, 30, 3);
  IntMatrix w = g.travel();
  for (int i = 0; i < n; ++i) w(i, i) = 1;
  const RealMatrix p = random_chain(n, rng);
  std::vector<double> f;
  report("first_visit",
         seconds([&] { f = kernels::first_visit_serial(p, w, k_max); }, 3),
         seconds([&] { f = kernels::first_visit_parallel(p, w, k_max); }, 3));

  const int t_max = 500;
  RealMatrix u(n, t_max + 1, 0.0);
  for (int j = 0; j < n; ++j)
    for (int t = 1; t <= t_max; ++t) u(j, t) = eval_utility(g.utility(j), t);
  std::vector<double> z;
  report("payoff_tensor",
         seconds([&] { z = kernels::payoff_tensor_serial(f, n, u, 2.0, t_max); }, 3),
         seconds([&] { z = kernels::payoff_tensor_parallel(f, n, u, 2.0, t_max); }, 3));

  const int m = 600;
  RealMatrix d(m, m, std::numeric_limits<double>::infinity());
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < 4; ++k) d(i, static_cast<int>(rng() % m)) = uniform01(rng) * 100;
  report("minimax_closure",
         seconds([&] { RealMatrix c = d; kernels::minimax_closure_serial(c); }, 2),
         seconds([&] { RealMatrix c = d; kernels::minimax_closure_parallel(c); }, 2));
  return 0;
}
