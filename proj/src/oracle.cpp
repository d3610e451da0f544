#include "psg/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "psg/decimal.hpp"
#include "psg/error.hpp"
#include "psg/tours.hpp"

namespace psg {

double attack_payoff(const ScheduleTrace& trace, int site, std::int64_t start, int duration,
                     const PolyUtility& utility, double penalty) {
  if (duration < 1) throw DomainError("attack duration must be >= 1");
  if (start + duration > trace.horizon)
    throw HorizonError("attack window ends at " + std::to_string(start + duration) +
                       ", beyond the trace horizon " + std::to_string(trace.horizon));
  for (const auto& e : trace.events) {
    if (e.time <= start || e.site != site) continue;
    if (e.time > start + duration) break;
    return cumulative_utility(utility, e.time - start) - penalty;
  }
  return cumulative_utility(utility, duration);
}

CaptureHistogram::CaptureHistogram(int n_, int t_max_)
    : n(n_),
      t_max(t_max_),
      counts(static_cast<std::size_t>(n_) * n_ * (t_max_ + 1), 0),
      events(n_, 0) {}

void CaptureHistogram::add(const CaptureHistogram& other) {
  for (std::size_t k = 0; k < counts.size(); ++k) counts[k] += other.counts[k];
  for (std::size_t k = 0; k < events.size(); ++k) events[k] += other.events[k];
}

void accumulate_trace(const ScheduleTrace& trace, CaptureHistogram& h) {
  const int n = h.n;
  const std::int64_t last_start = trace.horizon - h.t_max;
  constexpr std::int64_t never = std::numeric_limits<std::int64_t>::max();
  std::vector<std::int64_t> next(n, never);
  for (auto e = trace.events.rbegin(); e != trace.events.rend(); ++e) {
    if (e->time <= last_start) {
      ++h.events[e->site];
      for (int j = 0; j < n; ++j) {
        if (next[j] == never) continue;
        const std::int64_t c = next[j] - e->time;
        if (c <= h.t_max) ++h.at(e->site, j, static_cast<int>(c));
      }
    }
    next[e->site] = e->time;
  }
}

CaptureHistogram capture_histogram_serial(const std::vector<ScheduleTrace>& traces, int n,
                                          int t_max) {
  CaptureHistogram h(n, t_max);
  for (const auto& t : traces) accumulate_trace(t, h);
  return h;
}

CaptureHistogram capture_histogram_parallel(const std::vector<ScheduleTrace>& traces, int n,
                                            int t_max) {
  CaptureHistogram total(n, t_max);
#pragma omp parallel if (traces.size() >= 8)
  {
    CaptureHistogram local(n, t_max);
#pragma omp for schedule(dynamic, 4) nowait
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(traces.size()); ++k)
      accumulate_trace(traces[k], local);
#pragma omp critical
    total.add(local);
  }
  return total;
}

int default_attack_horizon(const GraphInstance& g) { return std::max(1, 4 * g.diameter()); }

double alignment_bound(const GraphInstance& g) {
  double b = 0.0;
  for (int i = 0; i < g.size(); ++i)
    for (int j = 0; j < g.size(); ++j)
      if (i != j) b = std::max(b, cumulative_utility(g.utility(j), g.travel(i, j)));
  return b;
}

std::vector<ScheduleTrace> sample_traces(const GeneratorFactory& factory, std::int64_t horizon,
                                         int count, std::uint64_t seed) {
  std::vector<ScheduleTrace> traces(count);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1) if (count >= 4)
  for (int k = 0; k < count; ++k) {
    try {
      traces[k] = sample_trace(factory, horizon, derive_seed(seed, {std::uint64_t(k)}));
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return traces;
}

namespace {

struct Cell {
  int cond = -1;
  int site = -1;
};

// Start sites pooled by a cell.
std::vector<int> cell_starts(Visibility model, const Cell& c, int n) {
  if (model == Visibility::none) {
    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    return all;
  }
  return {c.cond};
}

// Payoff for T = 1..t_max of one cell; empty when the cell has no events.
std::vector<double> cell_curve(const CaptureHistogram& h, const std::vector<int>& starts, int j,
                               const std::vector<double>& cum, double penalty) {
  std::int64_t events = 0;
  for (int i : starts) events += h.events[i];
  if (events == 0) return {};
  // Per-cell frequencies are exact integer ratios, so replicating identical
  // traces leaves the curve unchanged bit for bit.
  const double total = static_cast<double>(events);
  std::vector<double> curve(h.t_max + 1, 0.0);
  double caught_sum = 0.0;
  std::int64_t caught = 0;
  for (int t = 1; t <= h.t_max; ++t) {
    std::int64_t cnt = 0;
    for (int i : starts) cnt += h.at(i, j, t);
    caught += cnt;
    caught_sum += static_cast<double>(cnt) / total * (cum[t] - penalty);
    curve[t] = caught_sum + static_cast<double>(events - caught) / total * cum[t];
  }
  return curve;
}

}  // namespace

PayoffReport best_response_from_traces(const std::vector<ScheduleTrace>& traces,
                                       const GraphInstance& g, Visibility model, int t_max) {
  const int n = g.size();
  if (t_max < 1) throw DomainError("T_max must be >= 1");
  if (traces.empty()) throw DomainError("need at least one trace");
  for (const auto& t : traces)
    if (t_max >= t.horizon)
      throw HorizonError("T_max " + std::to_string(t_max) + " must be below the horizon " +
                         std::to_string(t.horizon));
  std::vector<std::vector<double>> cum(n, std::vector<double>(t_max + 1, 0.0));
  for (int j = 0; j < n; ++j) {
    CumulativeTable table(g.utility(j));
    for (int t = 1; t <= t_max; ++t) cum[j][t] = table(t);
  }
  const double penalty = g.penalty();
  const CaptureHistogram h = capture_histogram_parallel(traces, n, t_max);

  PayoffReport r;
  r.model = model;
  r.traces = static_cast<int>(traces.size());
  r.underestimate_bound = alignment_bound(g);
  double best = -std::numeric_limits<double>::infinity();
  Cell arg;
  std::vector<std::string> uncovered;
  for (int j = 0; j < n; ++j) {
    std::vector<int> conds;
    if (model == Visibility::full)
      for (int i = 0; i < n; ++i) conds.push_back(i);
    else
      conds.push_back(model == Visibility::local ? j : -1);
    for (int cond : conds) {
      const Cell cell{cond, j};
      const auto curve = cell_curve(h, cell_starts(model, cell, n), j, cum[j], penalty);
      if (curve.empty()) {
        uncovered.push_back(cond < 0 ? "*->" + std::to_string(j)
                                     : std::to_string(cond) + "->" + std::to_string(j));
        continue;
      }
      for (int t = 1; t <= t_max; ++t)
        if (curve[t] > best) {
          best = curve[t];
          arg = cell;
          r.duration = t;
        }
    }
  }
  if (!uncovered.empty()) {
    std::string msg = "no attack starts observed for cells:";
    for (const auto& c : uncovered) msg += " " + c;
    r.warnings.push_back(msg);
  }
  if (arg.site < 0) throw HorizonError("no attack start fits within the horizon");
  r.value = best;
  r.site = arg.site;
  r.start_site = arg.cond;

  const auto starts = cell_starts(model, arg, n);
  for (int i : starts) r.samples += h.events[i];
  std::vector<double> per_trace;
  for (const auto& t : traces) {
    CaptureHistogram one(n, t_max);
    accumulate_trace(t, one);
    const auto curve = cell_curve(one, starts, arg.site, cum[arg.site], penalty);
    if (!curve.empty()) per_trace.push_back(curve[r.duration]);
  }
  if (per_trace.size() > 1) {
    double mean = 0.0, ss = 0.0;
    for (double v : per_trace) mean += v;
    mean /= per_trace.size();
    for (double v : per_trace) ss += (v - mean) * (v - mean);
    r.stderr = std::sqrt(ss / (per_trace.size() - 1) / per_trace.size());
  }
  return r;
}

PayoffReport best_response_empirical(const GeneratorFactory& factory, const GraphInstance& g,
                                     Visibility model, std::int64_t horizon, int traces,
                                     int t_max, std::uint64_t seed, std::optional<double> zeta) {
  if (traces < 1) throw DomainError("need at least one sampled trace");
  if (t_max < 1 || t_max >= horizon)
    throw HorizonError("T_max must satisfy 1 <= T_max < horizon");
  auto r = best_response_from_traces(sample_traces(factory, horizon, traces, seed), g, model,
                                     t_max);
  if (zeta) r = normalize(std::move(r), *zeta);
  return r;
}

PayoffReport normalize(PayoffReport r, double zeta) {
  if (!(zeta > 0.0))
    throw DomainError("normalization constant must be positive, got " + format_real(zeta));
  r.zeta = zeta;
  r.normalized = r.value / zeta;
  r.normalized_stderr = r.stderr / zeta;
  return r;
}

double attacker_zeta(const GraphInstance& g, Visibility model, std::int64_t horizon,
                     int t_max) {
  const BgtPlan plan = bgt_plan(g);
  const GeneratorFactory f = [&](std::uint64_t) { return bgt_generator(g, plan); };
  return best_response_empirical(f, g, model, horizon, 1, t_max, 0).value;
}

namespace {

nlohmann::json optional_real(const std::optional<double>& v) {
  return v ? nlohmann::json(format_real(*v)) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json to_json(const PayoffReport& r) {
  return {{"model", to_string(r.model)},
          {"value", format_real(r.value)},
          {"site", r.site},
          {"start_site", r.start_site},
          {"duration", r.duration},
          {"samples", r.samples},
          {"traces", r.traces},
          {"stderr", format_real(r.stderr)},
          {"zeta", optional_real(r.zeta)},
          {"normalized", optional_real(r.normalized)},
          {"normalized_stderr", optional_real(r.normalized_stderr)},
          {"underestimate_bound", format_real(r.underestimate_bound)},
          {"warnings", r.warnings}};
}

std::string payoff_csv_header() {
  return "generator,alpha,model,penalty,value,normalized,stderr,site,duration";
}

std::string payoff_csv_row(const std::string& generator, double alpha, double penalty,
                           const PayoffReport& r) {
  std::ostringstream out;
  out << generator << ',' << format_real(alpha) << ',' << to_string(r.model) << ','
      << format_real(penalty) << ',' << format_real(r.value) << ','
      << (r.normalized ? format_real(*r.normalized) : "") << ','
      << format_real(r.normalized_stderr ? *r.normalized_stderr : r.stderr) << ',' << r.site
      << ',' << r.duration;
  return out.str();
}

}  // namespace psg
