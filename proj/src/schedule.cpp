#include "psg/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "psg/decimal.hpp"
#include "psg/error.hpp"

namespace psg {

double shannon_entropy(const std::vector<double>& dist) {
  double h = 0.0;
  for (double p : dist)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

double ScheduleGenerator::step_entropy() {
  auto d = next_distribution();
  if (!d) throw ValidationError("generator does not expose its next-site distribution");
  return shannon_entropy(*d);
}

Visit ScheduleGenerator::advance(int site) {
  if (site < 0 || site >= size()) throw ValidationError("generator emitted an invalid site");
  if (site_ >= 0) time_ += site == site_ ? 1 : travel_(site_, site);
  site_ = site;
  return {site, time_};
}

CyclicStream::CyclicStream(std::vector<int> period) : period_(std::move(period)) {
  if (period_.empty()) throw ValidationError("periodic schedule is empty");
}

int CyclicStream::next_site() {
  const int s = period_[pos_];
  pos_ = (pos_ + 1) % period_.size();
  return s;
}

int StreamGenerator::peek() {
  if (!peeked_) peeked_ = stream_->next_site();
  return *peeked_;
}

std::optional<std::vector<double>> StreamGenerator::next_distribution() {
  std::vector<double> d(size(), 0.0);
  d[peek()] = 1.0;
  return d;
}

int StreamGenerator::next_site() {
  const int s = peek();
  peeked_.reset();
  return s;
}

std::unique_ptr<ScheduleGenerator> cyclic_generator(const IntMatrix& travel,
                                                    std::vector<int> period) {
  for (int s : period)
    if (s < 0 || s >= static_cast<int>(travel.rows()))
      throw ValidationError("periodic schedule names an unknown site");
  return std::make_unique<StreamGenerator>(
      travel, std::make_unique<CyclicStream>(std::move(period)));
}

MarkovGenerator::MarkovGenerator(IntMatrix travel, RealMatrix p, int start,
                                 std::uint64_t seed)
    : ScheduleGenerator(std::move(travel)), p_(std::move(p)), start_(start), rng_(seed) {
  if (p_.rows() != static_cast<std::size_t>(size()) || p_.cols() != p_.rows())
    throw ValidationError("transition matrix does not match travel matrix");
  if (start < 0 || start >= size()) throw ValidationError("start site out of range");
}

std::optional<std::vector<double>> MarkovGenerator::next_distribution() {
  std::vector<double> d(size(), 0.0);
  const int cur = current_site();
  if (cur < 0) {
    d[start_] = 1.0;
  } else {
    for (int j = 0; j < size(); ++j) d[j] = p_(cur, j);
  }
  return d;
}

int MarkovGenerator::next_site() {
  const int cur = current_site();
  if (cur < 0) return start_;
  std::vector<double> row(size());
  for (int j = 0; j < size(); ++j) row[j] = p_(cur, j);
  return static_cast<int>(sample_index(row, rng_));
}

ScheduleTrace sample_trace(ScheduleGenerator& g, std::int64_t horizon) {
  if (horizon < 1) throw DomainError("trace horizon must be >= 1");
  ScheduleTrace t;
  t.horizon = horizon;
  for (;;) {
    const Visit v = g.next();
    if (v.time > horizon) break;
    t.events.push_back(v);
  }
  return t;
}

ScheduleTrace sample_trace(const GeneratorFactory& factory, std::int64_t horizon,
                           std::uint64_t seed) {
  auto g = factory(seed);
  return sample_trace(*g, horizon);
}

std::vector<std::vector<std::int64_t>> visit_times(const ScheduleTrace& trace,
                                                   int n) {
  std::vector<std::vector<std::int64_t>> u(n);
  for (const auto& e : trace.events) u.at(e.site).push_back(e.time);
  return u;
}

std::optional<std::int64_t> max_return_time(const ScheduleTrace& trace, int site) {
  std::optional<std::int64_t> last, best;
  for (const auto& e : trace.events) {
    if (e.site != site) continue;
    if (last) best = std::max(best.value_or(0), e.time - *last);
    last = e.time;
  }
  return best;
}

std::int64_t coverage_horizon(const GeneratorFactory& factory, int min_visits,
                              std::int64_t limit) {
  auto g = factory(0);
  std::vector<int> count(g->size(), 0);
  int short_sites = g->size();
  for (;;) {
    const Visit v = g->next();
    if (v.time > limit) throw ResourceError("schedule does not cover every site within " + std::to_string(limit) + " slots");
    if (++count[v.site] == min_visits) --short_sites;
    if (short_sites == 0) return std::max<std::int64_t>(v.time, 1);
  }
}

namespace {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe r;
  if (xs.empty()) return r;
  for (double x : xs) r.mean += x;
  r.mean /= xs.size();
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.se = std::sqrt(ss / (xs.size() - 1) / xs.size());
  }
  return r;
}

}  // namespace

EmrReport emr_estimate(const GeneratorFactory& factory,
                       const std::vector<PolyUtility>& utilities, int samples,
                       std::int64_t horizon, std::uint64_t seed) {
  if (samples < 1) throw DomainError("EMR needs at least one sample");
  const int n = static_cast<int>(utilities.size());
  std::vector<std::vector<double>> values(n);
  EmrReport r;
  r.lower_bound.assign(n, false);
  for (int k = 0; k < samples; ++k) {
    const auto trace = sample_trace(factory, horizon, derive_seed(seed, {std::uint64_t(k)}));
    const auto times = visit_times(trace, n);
    for (int j = 0; j < n; ++j) {
      std::int64_t gap = 0;
      for (std::size_t r2 = 1; r2 < times[j].size(); ++r2)
        gap = std::max(gap, times[j][r2] - times[j][r2 - 1]);
      if (times[j].size() < 2) {
        gap = horizon;
        r.lower_bound[j] = true;
      }
      values[j].push_back(cumulative_utility(utilities[j], gap));
    }
  }
  r.per_site.resize(n);
  r.per_site_stderr.resize(n);
  for (int j = 0; j < n; ++j) {
    const auto m = mean_se(values[j]);
    r.per_site[j] = m.mean;
    r.per_site_stderr[j] = m.se;
    if (r.site < 0 || m.mean > r.emr) {
      r.emr = m.mean;
      r.stderr = m.se;
      r.site = j;
    }
  }
  r.samples = samples;
  r.horizon = horizon;
  return r;
}

EntropyReport entropy_rate_estimate(const GeneratorFactory& factory, int steps,
                                    int samples, std::uint64_t seed, bool bits) {
  if (steps < 1 || samples < 1) throw DomainError("entropy estimate needs steps >= 1 and samples >= 1");
  EntropyReport r;
  r.steps = steps;
  r.samples = samples;
  r.bits = bits;
  std::vector<double> rates;
  for (int k = 0; k < samples; ++k) {
    auto g = factory(derive_seed(seed, {std::uint64_t(k)}));
    if (g->deterministic()) {
      rates.push_back(0.0);
      continue;
    }
    g->next();
    double total = 0.0;
    for (int s = 0; s < steps; ++s) {
      total += g->step_entropy();
      g->next();
    }
    rates.push_back(total / steps / (bits ? std::log(2.0) : 1.0));
  }
  const auto m = mean_se(rates);
  r.rate = m.mean;
  r.stderr = m.se;
  return r;
}

void write_trace_csv(const ScheduleTrace& trace, std::ostream& out) {
  out << "t,site\n";
  for (const auto& e : trace.events) out << e.time << ',' << e.site << '\n';
}

void write_trace_csv(const ScheduleTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write trace file " + path.string());
  write_trace_csv(trace, out);
}

ScheduleTrace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open trace file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "t,site")
    throw ParseError(path.string() + ": expected header 't,site'");
  ScheduleTrace t;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError(path.string() + ": row " + std::to_string(row) + " is malformed");
    try {
      Visit v{std::stoi(line.substr(comma + 1)), std::stoll(line.substr(0, comma))};
      t.events.push_back(v);
    } catch (const std::exception&) {
      throw ParseError(path.string() + ": row " + std::to_string(row) + " is not numeric");
    }
  }
  t.horizon = t.events.empty() ? 0 : t.events.back().time;
  return t;
}

nlohmann::json to_json(const EmrReport& r) {
  nlohmann::json sites = nlohmann::json::array();
  for (std::size_t j = 0; j < r.per_site.size(); ++j)
    sites.push_back({{"site", j},
                     {"emr", format_real(r.per_site[j])},
                     {"stderr", format_real(r.per_site_stderr[j])},
                     {"lower_bound", static_cast<bool>(r.lower_bound[j])}});
  return {{"emr", format_real(r.emr)},
          {"stderr", format_real(r.stderr)},
          {"site", r.site},
          {"samples", r.samples},
          {"horizon", r.horizon},
          {"per_site", sites}};
}

nlohmann::json to_json(const EntropyReport& r) {
  return {{"entropy_rate", format_real(r.rate)},
          {"stderr", format_real(r.stderr)},
          {"units", r.bits ? "bits" : "nats"},
          {"steps", r.steps},
          {"samples", r.samples}};
}

}  // namespace psg
