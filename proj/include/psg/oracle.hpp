#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "psg/instance.hpp"
#include "psg/markov.hpp"
#include "psg/schedule.hpp"

namespace psg {

/// Realized payoff of attacking `site` over slots (t_s, t_s + duration]:
/// captured at relative time c gives U(c) - M, otherwise U(duration).
double attack_payoff(const ScheduleTrace& trace, int site, std::int64_t start,
                     int duration, const PolyUtility& utility, double penalty);

/// Capture-offset counts. For every arrival event at site i with time
/// <= horizon - t_max and every target j, the offset c in 1..t_max of the
/// next arrival at j is counted in cell (i, j, c).
struct CaptureHistogram {
  int n = 0;
  int t_max = 0;
  std::vector<std::int64_t> counts;  ///< [(i*n + j)*(t_max+1) + c]
  std::vector<std::int64_t> events;  ///< per start site i

  CaptureHistogram() = default;
  CaptureHistogram(int n, int t_max);
  std::int64_t& at(int i, int j, int c) {
    return counts[(static_cast<std::size_t>(i) * n + j) * (t_max + 1) + c];
  }
  std::int64_t at(int i, int j, int c) const {
    return counts[(static_cast<std::size_t>(i) * n + j) * (t_max + 1) + c];
  }
  void add(const CaptureHistogram& other);
  bool operator==(const CaptureHistogram&) const = default;
};

void accumulate_trace(const ScheduleTrace& trace, CaptureHistogram& h);
CaptureHistogram capture_histogram_serial(const std::vector<ScheduleTrace>& traces, int n,
                                          int t_max);
CaptureHistogram capture_histogram_parallel(const std::vector<ScheduleTrace>& traces, int n,
                                            int t_max);

struct PayoffReport {
  Visibility model = Visibility::full;
  double value = 0.0;
  int site = -1;
  /// Start condition: observed site (full), the attacked site (local), -1 (none).
  int start_site = -1;
  int duration = 0;
  /// Attack starts behind the argmax cell.
  std::int64_t samples = 0;
  int traces = 0;
  double stderr = 0.0;
  std::optional<double> zeta;
  std::optional<double> normalized;
  std::optional<double> normalized_stderr;
  /// max_{i != j} U_j(w_ij): payoff slack of aligning starts with arrivals.
  double underestimate_bound = 0.0;
  std::vector<std::string> warnings;
};

/// 4 x diameter, at least 1.
int default_attack_horizon(const GraphInstance& g);

double alignment_bound(const GraphInstance& g);

/// Sampled traces use seeds derive_seed(seed, {k}).
std::vector<ScheduleTrace> sample_traces(const GeneratorFactory& factory, std::int64_t horizon,
                                         int count, std::uint64_t seed);

PayoffReport best_response_from_traces(const std::vector<ScheduleTrace>& traces,
                                       const GraphInstance& g, Visibility model,
                                       int t_max);

PayoffReport best_response_empirical(const GeneratorFactory& factory, const GraphInstance& g,
                                     Visibility model, std::int64_t horizon, int traces,
                                     int t_max, std::uint64_t seed,
                                     std::optional<double> zeta = std::nullopt);

/// Throws DomainError for zeta <= 0.
PayoffReport normalize(PayoffReport r, double zeta);

/// Payoff against the deterministic BGT schedule under the same model,
/// penalty and T_max.
double attacker_zeta(const GraphInstance& g, Visibility model, std::int64_t horizon,
                     int t_max);

nlohmann::json to_json(const PayoffReport& r);
std::string payoff_csv_header();
std::string payoff_csv_row(const std::string& generator, double alpha, double penalty,
                           const PayoffReport& r);

}  // namespace psg
