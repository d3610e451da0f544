#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "psg/matrix.hpp"

namespace psg {

struct Site {
  int id = 0;
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Site&) const = default;
};

/// h(t) = sum_k c_k t^k with nonnegative coefficients.
class PolyUtility {
 public:
  PolyUtility() : coeffs_{0.0} {}
  explicit PolyUtility(std::vector<double> coefficients);

  static PolyUtility constant(double c) { return PolyUtility({c}); }

  const std::vector<double>& coefficients() const { return coeffs_; }
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  /// Coefficient of t^k (zero beyond the stored degree).
  double coefficient(int k) const;
  bool is_zero() const;
  bool is_constant() const;

  /// h(t); throws DomainError for t <= 0.
  double operator()(std::int64_t t) const;

  bool operator==(const PolyUtility&) const = default;

 private:
  std::vector<double> coeffs_;
};

double eval_utility(const PolyUtility& u, std::int64_t t);

/// sum_{t=1}^{T} h(t); zero for T <= 0.
double cumulative_utility(const PolyUtility& u, std::int64_t duration);

/// Lazily grown prefix table of cumulative_utility for one utility. Entries
/// are accumulated in the same order as cumulative_utility, so the two agree
/// bit for bit.
class CumulativeTable {
 public:
  explicit CumulativeTable(PolyUtility u) : u_(std::move(u)), prefix_{0.0} {}
  double operator()(std::int64_t duration);
  const PolyUtility& utility() const { return u_; }

 private:
  PolyUtility u_;
  std::vector<double> prefix_;
};

struct UtilitySpec {
  int degree = 0;
  double coef_lo = 0.001;
  double coef_hi = 1.0;
  /// Draw a single utility and give it to every site.
  bool shared = false;
};

/// Immutable patrol-game instance (sites, integer metric travel times,
/// per-site utilities, penalty M). Construction validates every invariant.
class GraphInstance {
 public:
  GraphInstance(std::vector<Site> sites, IntMatrix travel,
                std::vector<PolyUtility> utilities, double penalty = 0.0);

  int size() const { return static_cast<int>(sites_.size()); }
  const std::vector<Site>& sites() const { return sites_; }
  const IntMatrix& travel() const { return travel_; }
  int travel(int i, int j) const { return travel_(i, j); }
  /// Slots consumed moving from a to b; staying put costs one slot.
  int transit(int a, int b) const { return a == b ? 1 : travel_(a, b); }
  const std::vector<PolyUtility>& utilities() const { return utilities_; }
  const PolyUtility& utility(int j) const { return utilities_[j]; }
  double penalty() const { return penalty_; }

  /// Largest pairwise travel time (0 for a single site).
  int diameter() const;
  int max_degree() const;
  /// True when every site carries the same utility function.
  bool uniform_utilities() const;

  GraphInstance with_penalty(double penalty) const;
  GraphInstance with_utilities(std::vector<PolyUtility> utilities) const;

  bool operator==(const GraphInstance&) const = default;

 private:
  std::vector<Site> sites_;
  IntMatrix travel_;
  std::vector<PolyUtility> utilities_;
  double penalty_;
};

/// Ceiling-of-Euclidean travel matrix, at least one slot off the diagonal.
IntMatrix travel_from_coordinates(const std::vector<Site>& sites);

/// Unit travel time between every pair of distinct sites.
GraphInstance unit_instance(std::vector<PolyUtility> utilities,
                            double penalty = 0.0);

GraphInstance generate_random_instance(int n, double side, std::uint64_t seed,
                                       const UtilitySpec& spec = {},
                                       double penalty = 0.0);

GraphInstance load_sites_csv(const std::filesystem::path& path,
                             const UtilitySpec& spec = {},
                             std::uint64_t seed = 0, double penalty = 0.0);

/// Throws ValidationError describing the first violated invariant.
void validate_travel(const IntMatrix& travel);

nlohmann::json to_json(const GraphInstance& g);
GraphInstance instance_from_json(const nlohmann::json& j);
void save_instance(const GraphInstance& g, const std::filesystem::path& path);
GraphInstance load_instance(const std::filesystem::path& path);

}  // namespace psg
