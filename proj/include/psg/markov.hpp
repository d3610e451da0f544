#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "psg/instance.hpp"
#include "psg/matrix.hpp"

namespace psg {

enum class Visibility { full, local, none };

std::string to_string(Visibility v);
Visibility visibility_from_string(const std::string& s);

/// Row-stochastic transition matrix over sites. Self-loops are allowed and
/// cost one slot of dwell.
class TransitionMatrix {
 public:
  explicit TransitionMatrix(RealMatrix p);
  int size() const { return static_cast<int>(p_.rows()); }
  double operator()(int i, int j) const { return p_(i, j); }
  const RealMatrix& matrix() const { return p_; }

 private:
  RealMatrix p_;
};

/// Travel matrix as seen by a chain: off-diagonal travel, 1 on the diagonal.
IntMatrix chain_weights(const IntMatrix& travel);
IntMatrix unit_weights(int n);

/// True when every site is reachable from every other site through
/// positive-probability moves; otherwise fills the first unreachable pair.
bool is_irreducible(const TransitionMatrix& p, int* from = nullptr,
                    int* to = nullptr);

/// F_k(i,j) for k = 1..k_max.
class FirstVisitTensor {
 public:
  FirstVisitTensor(int n, int k_max, std::vector<double> values);
  int size() const { return n_; }
  int k_max() const { return k_max_; }
  double operator()(int k, int i, int j) const {
    return k < 1 || k > k_max_ ? 0.0
                               : f_[(static_cast<std::size_t>(k - 1) * n_ + i) * n_ + j];
  }
  /// sum_{k<=k_max} F_k(i,j)
  double mass(int i, int j) const;
  /// 1 - mass(i,j): first-visit probability beyond the horizon.
  double tail(int i, int j) const { return 1.0 - mass(i, j); }
  const std::vector<double>& values() const { return f_; }

 private:
  int n_;
  int k_max_;
  std::vector<double> f_;
};

inline constexpr std::size_t kDefaultMaxTensorEntries = std::size_t{1} << 25;

/// 200 * n * max(W), the default truncation horizon.
int default_k_max(const IntMatrix& weights);

FirstVisitTensor compute_first_visit(
    const TransitionMatrix& p, const IntMatrix& travel, int k_max,
    std::size_t max_entries = kDefaultMaxTensorEntries);

struct HittingTimeMatrix {
  /// a(i,j): expected first hitting time; a(i,i) is the expected return time.
  RealMatrix a;
  /// Per-pair first-visit mass not covered by the truncated sum.
  RealMatrix tail;
  double max_tail() const;
};

HittingTimeMatrix compute_hitting_times(const FirstVisitTensor& f,
                                        double tail_tolerance = 1e-3);

/// Linear-system hitting times: a_ij = sum_h p_ih (w_ih + [h != j] a_hj).
HittingTimeMatrix hitting_times_exact(const TransitionMatrix& p,
                                      const IntMatrix& travel);

std::vector<double> stationary_distribution(const TransitionMatrix& p);

struct KemenyResult {
  double kappa = 0.0;
  std::vector<double> per_start;
};

/// Unit-step Kemeny constant with return times on the diagonal of A.
KemenyResult kemeny_constant(const TransitionMatrix& p);

struct PayoffValue {
  double value = 0.0;
  /// First-visit mass of the pair beyond the tensor horizon.
  double truncation_bound = 0.0;
};

/// Z_{i,j,T} = sum_{t<=T} (h_j(t) - M) F_t(i,j) + h_j(t) sum_{k>t} F_k(i,j).
/// Tails are taken as 1 - sum_{k<=t} F_k, exact for irreducible chains.
PayoffValue payoff_full_visibility(const FirstVisitTensor& f,
                                   const std::vector<PolyUtility>& utilities,
                                   double penalty, int from, int target,
                                   int duration);

struct MarkovPayoffReport {
  Visibility model = Visibility::full;
  double value = 0.0;
  int site_from = -1;  ///< -1 when the model does not condition on a start
  int site_attacked = -1;
  int duration = 0;
  double truncation_bound = 0.0;
  bool unbounded = false;  ///< reducible chain: attack lasts forever
};

MarkovPayoffReport best_response_markov(const TransitionMatrix& p,
                                        const FirstVisitTensor& f,
                                        const std::vector<PolyUtility>& utilities,
                                        double penalty, Visibility model,
                                        int t_max);

struct HighPenaltyResult {
  double value = -std::numeric_limits<double>::infinity();
  int site_from = -1;
  int site_attacked = -1;
  int duration = 0;
  /// Maximizer sits at T_max: the expression keeps growing with T.
  bool diverging = false;
};

/// max_T (h_j T - (M+1) sum_{t<=T} F_t(i,j)) for one pair.
HighPenaltyResult high_penalty_pair(const FirstVisitTensor& f, double h,
                                    double penalty, int from, int target,
                                    int t_max);

/// Same objective maximized over every pair; constant utilities only.
HighPenaltyResult high_penalty_objective(
    const FirstVisitTensor& f, const std::vector<PolyUtility>& utilities,
    double penalty, int t_max);

nlohmann::json matrix_to_json(const RealMatrix& m);
RealMatrix matrix_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MarkovPayoffReport& r);

}  // namespace psg
