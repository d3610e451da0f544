#include "psg/markov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "psg/decimal.hpp"
#include "psg/error.hpp"
#include "psg/kernels.hpp"

namespace psg {

std::string to_string(Visibility v) {
  switch (v) {
    case Visibility::full: return "full";
    case Visibility::local: return "local";
    case Visibility::none: return "none";
  }
  return "?";
}

Visibility visibility_from_string(const std::string& s) {
  if (s == "full") return Visibility::full;
  if (s == "local") return Visibility::local;
  if (s == "none" || s == "no") return Visibility::none;
  throw ValidationError("unknown visibility model '" + s +
                        "' (expected full, local or none)");
}

TransitionMatrix::TransitionMatrix(RealMatrix p) : p_(std::move(p)) {
  if (p_.rows() == 0 || p_.rows() != p_.cols())
    throw ValidationError("transition matrix must be square and nonempty");
  for (std::size_t i = 0; i < p_.rows(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < p_.cols(); ++j) {
      const double v = p_(i, j);
      if (!(v >= 0.0 && v <= 1.0))
        throw ValidationError("transition probabilities must lie in [0,1]");
      row += v;
    }
    if (std::abs(row - 1.0) > 1e-12)
      throw ValidationError("row " + std::to_string(i) + " sums to " +
                            format_real(row) + ", expected 1");
  }
}

IntMatrix chain_weights(const IntMatrix& travel) {
  IntMatrix w = travel;
  for (std::size_t i = 0; i < w.rows(); ++i) w(i, i) = 1;
  return w;
}

IntMatrix unit_weights(int n) { return IntMatrix(n, n, 1); }

bool is_irreducible(const TransitionMatrix& p, int* from, int* to) {
  const int n = p.size();
  for (int s = 0; s < n; ++s) {
    std::vector<char> seen(n, 0);
    std::queue<int> q;
    q.push(s);
    seen[s] = 1;
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int v = 0; v < n; ++v)
        if (p(u, v) > 0.0 && !seen[v]) {
          seen[v] = 1;
          q.push(v);
        }
    }
    for (int t = 0; t < n; ++t) {
      if (!seen[t]) {
        if (from) *from = s;
        if (to) *to = t;
        return false;
      }
    }
  }
  return true;
}

namespace {

void require_irreducible(const TransitionMatrix& p) {
  int from = -1, to = -1;
  if (!is_irreducible(p, &from, &to)) throw ReducibleChainError(from, to);
}

IntMatrix checked_weights(const TransitionMatrix& p, const IntMatrix& travel) {
  const int n = p.size();
  if (static_cast<int>(travel.rows()) != n || static_cast<int>(travel.cols()) != n)
    throw ValidationError("travel matrix does not match chain size");
  IntMatrix w = chain_weights(travel);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (p(i, j) > 0.0 && w(i, j) < 1)
        throw ValidationError("positive-probability move with travel < 1");
  return w;
}

}  // namespace

FirstVisitTensor::FirstVisitTensor(int n, int k_max, std::vector<double> values)
    : n_(n), k_max_(k_max), f_(std::move(values)) {}

double FirstVisitTensor::mass(int i, int j) const {
  double m = 0.0;
  for (int k = 1; k <= k_max_; ++k) m += (*this)(k, i, j);
  return m;
}

int default_k_max(const IntMatrix& weights) {
  int max_w = 1;
  for (int v : weights.data()) max_w = std::max(max_w, v);
  return 200 * static_cast<int>(weights.rows()) * max_w;
}

FirstVisitTensor compute_first_visit(const TransitionMatrix& p,
                                     const IntMatrix& travel, int k_max,
                                     std::size_t max_entries) {
  if (k_max < 1) throw DomainError("first-visit horizon k_max must be >= 1");
  const int n = p.size();
  const std::size_t entries = static_cast<std::size_t>(k_max) * n * n;
  if (entries > max_entries)
    throw ResourceError("first-visit tensor needs " + std::to_string(entries) +
                        " entries, cap is " + std::to_string(max_entries));
  const IntMatrix w = checked_weights(p, travel);
  return FirstVisitTensor(n, k_max,
                          kernels::first_visit_parallel(p.matrix(), w, k_max));
}

double HittingTimeMatrix::max_tail() const {
  double m = 0.0;
  for (double v : tail.data()) m = std::max(m, v);
  return m;
}

HittingTimeMatrix compute_hitting_times(const FirstVisitTensor& f,
                                        double tail_tolerance) {
  const int n = f.size();
  HittingTimeMatrix h{RealMatrix(n, n, 0.0), RealMatrix(n, n, 0.0)};
  int worst_i = 0, worst_j = 0;
  double worst = -1.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double a = 0.0, mass = 0.0;
      for (int k = 1; k <= f.k_max(); ++k) {
        const double v = f(k, i, j);
        a += k * v;
        mass += v;
      }
      h.a(i, j) = a;
      h.tail(i, j) = std::max(0.0, 1.0 - mass);
      if (h.tail(i, j) > worst) {
        worst = h.tail(i, j);
        worst_i = i;
        worst_j = j;
      }
    }
  }
  if (worst > tail_tolerance) throw TruncationError(worst_i, worst_j, worst);
  return h;
}

HittingTimeMatrix hitting_times_exact(const TransitionMatrix& p,
                                      const IntMatrix& travel) {
  require_irreducible(p);
  const int n = p.size();
  const IntMatrix w = checked_weights(p, travel);
  Eigen::VectorXd step_cost(n);
  for (int i = 0; i < n; ++i) {
    double c = 0.0;
    for (int h = 0; h < n; ++h) c += p(i, h) * w(i, h);
    step_cost(i) = c;
  }
  HittingTimeMatrix out{RealMatrix(n, n, 0.0), RealMatrix(n, n, 0.0)};
  for (int j = 0; j < n; ++j) {
    // (I - P with column j removed) a = expected one-step cost
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i)
      for (int h = 0; h < n; ++h)
        if (h != j) m(i, h) -= p(i, h);
    const Eigen::VectorXd a = m.partialPivLu().solve(step_cost);
    for (int i = 0; i < n; ++i) out.a(i, j) = a(i);
  }
  return out;
}

std::vector<double> stationary_distribution(const TransitionMatrix& p) {
  require_irreducible(p);
  const int n = p.size();
  // (P^T - I) pi = 0 with the last balance equation replaced by sum(pi) = 1.
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = p(j, i) - (i == j ? 1.0 : 0.0);
  m.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  const Eigen::VectorXd pi = m.fullPivLu().solve(rhs);
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = std::max(0.0, pi(i));
  return out;
}

KemenyResult kemeny_constant(const TransitionMatrix& p) {
  const int n = p.size();
  const auto pi = stationary_distribution(p);
  IntMatrix unit(n, n, 1);
  for (int i = 0; i < n; ++i) unit(i, i) = 0;
  const auto a = hitting_times_exact(p, unit).a;
  KemenyResult r;
  r.per_start.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) r.per_start[i] += a(i, j) * pi[j];
    r.kappa += pi[i] * r.per_start[i];
  }
  return r;
}

namespace {

RealMatrix utility_table(const std::vector<PolyUtility>& utilities, int t_max) {
  RealMatrix hv(utilities.size(), static_cast<std::size_t>(t_max) + 1, 0.0);
  for (std::size_t j = 0; j < utilities.size(); ++j)
    for (int t = 1; t <= t_max; ++t) hv(j, t) = utilities[j](t);
  return hv;
}

void check_utilities(const FirstVisitTensor& f,
                     const std::vector<PolyUtility>& utilities) {
  if (static_cast<int>(utilities.size()) != f.size())
    throw ValidationError("need one utility per chain state");
}

}  // namespace

PayoffValue payoff_full_visibility(const FirstVisitTensor& f,
                                   const std::vector<PolyUtility>& utilities,
                                   double penalty, int from, int target,
                                   int duration) {
  check_utilities(f, utilities);
  if (duration < 1) throw DomainError("attack duration must be >= 1");
  if (duration > f.k_max())
    throw HorizonError("attack duration " + std::to_string(duration) +
                       " exceeds first-visit horizon " + std::to_string(f.k_max()));
  const auto& h = utilities[target];
  double cum = 0.0, total = 0.0;
  for (int t = 1; t <= duration; ++t) {
    const double ft = f(t, from, target);
    cum += ft;
    const double ht = h(t);
    total += (ht - penalty) * ft + ht * (1.0 - cum);
  }
  return {total, std::max(0.0, f.tail(from, target))};
}

MarkovPayoffReport best_response_markov(const TransitionMatrix& p,
                                        const FirstVisitTensor& f,
                                        const std::vector<PolyUtility>& utilities,
                                        double penalty, Visibility model,
                                        int t_max) {
  check_utilities(f, utilities);
  if (p.size() != f.size()) throw ValidationError("chain and tensor sizes differ");
  if (t_max < 1) throw DomainError("T_max must be >= 1");
  if (t_max > f.k_max())
    throw HorizonError("T_max " + std::to_string(t_max) +
                       " exceeds first-visit horizon " + std::to_string(f.k_max()));
  MarkovPayoffReport r;
  r.model = model;
  int from = -1, to = -1;
  if (!is_irreducible(p, &from, &to)) {
    r.unbounded = true;
    r.value = std::numeric_limits<double>::infinity();
    r.site_from = model == Visibility::none ? -1 : from;
    r.site_attacked = to;
    return r;
  }
  const int n = f.size();
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  const auto z = kernels::payoff_tensor_parallel(
      f.values(), n, utility_table(utilities, t_max), penalty, t_max);
  const auto at = [&](int t, int i, int j) {
    return z[(t - 1) * nn + static_cast<std::size_t>(i) * n + j];
  };

  double best = -std::numeric_limits<double>::infinity();
  // Lexicographic (j, i, T) scan with strict improvement keeps the smallest
  // maximizing triple.
  if (model == Visibility::full || model == Visibility::local) {
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        if (model == Visibility::local && i != j) continue;
        for (int t = 1; t <= t_max; ++t)
          if (at(t, i, j) > best) {
            best = at(t, i, j);
            r.site_from = i;
            r.site_attacked = j;
            r.duration = t;
          }
      }
  } else {
    const auto pi = stationary_distribution(p);
    for (int j = 0; j < n; ++j)
      for (int t = 1; t <= t_max; ++t) {
        double v = 0.0;
        for (int i = 0; i < n; ++i) v += pi[i] * at(t, i, j);
        if (v > best) {
          best = v;
          r.site_attacked = j;
          r.duration = t;
        }
      }
  }
  r.value = best;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      r.truncation_bound = std::max(r.truncation_bound, f.tail(i, j));
  return r;
}

HighPenaltyResult high_penalty_pair(const FirstVisitTensor& f, double h,
                                    double penalty, int from, int target,
                                    int t_max) {
  if (t_max < 1) throw DomainError("T_max must be >= 1");
  if (t_max > f.k_max()) throw HorizonError("T_max exceeds first-visit horizon");
  HighPenaltyResult r;
  double cum = 0.0;
  for (int t = 1; t <= t_max; ++t) {
    cum += f(t, from, target);
    const double v = h * t - (penalty + 1.0) * cum;
    if (v > r.value) {
      r.value = v;
      r.site_from = from;
      r.site_attacked = target;
      r.duration = t;
    }
  }
  r.diverging = r.duration == t_max;
  return r;
}

HighPenaltyResult high_penalty_objective(
    const FirstVisitTensor& f, const std::vector<PolyUtility>& utilities,
    double penalty, int t_max) {
  check_utilities(f, utilities);
  for (const auto& u : utilities)
    if (!u.is_constant())
      throw ValidationError(
          "high-penalty objective is defined for constant utilities only");
  HighPenaltyResult best;
  const int n = f.size();
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      auto r = high_penalty_pair(f, utilities[j].coefficient(0), penalty, i, j,
                                 t_max);
      if (r.value > best.value) best = r;
    }
  return best;
}

nlohmann::json matrix_to_json(const RealMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(format_real(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

RealMatrix matrix_from_json(const nlohmann::json& j) {
  const std::size_t rows = j.size();
  const std::size_t cols = rows ? j[0].size() : 0;
  RealMatrix m(rows, cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    if (j[i].size() != cols) throw ParseError("ragged matrix");
    for (std::size_t k = 0; k < cols; ++k) {
      const auto& v = j[i][k];
      m(i, k) = v.is_string() ? parse_real(v.get<std::string>()) : v.get<double>();
    }
  }
  return m;
}

nlohmann::json to_json(const MarkovPayoffReport& r) {
  return {{"model", to_string(r.model)},
          {"value", format_real(r.value)},
          {"site_from", r.site_from},
          {"site_attacked", r.site_attacked},
          {"duration", r.duration},
          {"truncation_bound", format_real(r.truncation_bound)},
          {"unbounded", r.unbounded}};
}

}  // namespace psg
