#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "psg/instance.hpp"
#include "psg/matrix.hpp"
#include "psg/rng.hpp"

namespace psg {

struct Visit {
  int site = 0;
  std::int64_t time = 0;

  bool operator==(const Visit&) const = default;
};

/// Seeded stochastic process emitting patroller arrivals. The first call to
/// next() returns the starting visit at time 0; each later arrival is the
/// previous time plus the travel time (one slot when the site repeats).
class ScheduleGenerator {
 public:
  explicit ScheduleGenerator(IntMatrix travel) : travel_(std::move(travel)) {}
  virtual ~ScheduleGenerator() = default;

  int size() const { return static_cast<int>(travel_.rows()); }
  const IntMatrix& travel() const { return travel_; }

  Visit next() { return advance(next_site()); }

  /// Distribution over the site the next call to next() emits, when the
  /// generator can expose it.
  virtual std::optional<std::vector<double>> next_distribution() {
    return std::nullopt;
  }

  /// Entropy (nats) of the randomness consumed by the next step given the
  /// generator's full state. Defaults to the Shannon entropy of
  /// next_distribution(); throws ValidationError when neither is available.
  virtual double step_entropy();

  virtual bool deterministic() const { return false; }

 protected:
  virtual int next_site() = 0;
  /// Site of the last emitted visit, -1 before the first.
  int current_site() const { return site_; }

 private:
  Visit advance(int site);

  IntMatrix travel_;
  int site_ = -1;
  std::int64_t time_ = 0;
};

using GeneratorFactory =
    std::function<std::unique_ptr<ScheduleGenerator>(std::uint64_t seed)>;

/// Infinite stream of sites, the backbone for deterministic schedules.
class SiteStream {
 public:
  virtual ~SiteStream() = default;
  virtual int next_site() = 0;
};

/// Repeats a fixed site sequence forever.
class CyclicStream : public SiteStream {
 public:
  explicit CyclicStream(std::vector<int> period);
  int next_site() override;

 private:
  std::vector<int> period_;
  std::size_t pos_ = 0;
};

/// Deterministic generator over a site stream.
class StreamGenerator : public ScheduleGenerator {
 public:
  StreamGenerator(IntMatrix travel, std::unique_ptr<SiteStream> stream)
      : ScheduleGenerator(std::move(travel)), stream_(std::move(stream)) {}
  bool deterministic() const override { return true; }
  double step_entropy() override { return 0.0; }
  /// Point mass on the upcoming site.
  std::optional<std::vector<double>> next_distribution() override;

 protected:
  int next_site() override;

 private:
  int peek();

  std::unique_ptr<SiteStream> stream_;
  std::optional<int> peeked_;
};

/// Deterministic repetition of `period` (a periodic schedule).
std::unique_ptr<ScheduleGenerator> cyclic_generator(const IntMatrix& travel,
                                                    std::vector<int> period);

/// First-order Markov patroller started at `start`.
class MarkovGenerator : public ScheduleGenerator {
 public:
  MarkovGenerator(IntMatrix travel, RealMatrix p, int start, std::uint64_t seed);
  std::optional<std::vector<double>> next_distribution() override;

 protected:
  int next_site() override;

 private:
  RealMatrix p_;
  int start_;
  Rng rng_;
};

struct ScheduleTrace {
  std::vector<Visit> events;
  std::int64_t horizon = 0;

  bool operator==(const ScheduleTrace&) const = default;
};

/// Visits with arrival time <= horizon.
ScheduleTrace sample_trace(ScheduleGenerator& g, std::int64_t horizon);
ScheduleTrace sample_trace(const GeneratorFactory& factory,
                           std::int64_t horizon, std::uint64_t seed);

/// Ordered arrival times at each site.
std::vector<std::vector<std::int64_t>> visit_times(const ScheduleTrace& trace,
                                                   int n);

/// Largest gap between consecutive visits to `site`; nullopt when the site is
/// visited fewer than twice.
std::optional<std::int64_t> max_return_time(const ScheduleTrace& trace,
                                            int site);

/// Time at which a fresh generator from `factory` (seed 0) has visited every
/// site at least `min_visits` times. Throws ResourceError past `limit` slots.
std::int64_t coverage_horizon(const GeneratorFactory& factory, int min_visits,
                              std::int64_t limit = 100'000'000);

struct EmrReport {
  double emr = 0.0;
  double stderr = 0.0;
  int site = -1;
  std::vector<double> per_site;
  std::vector<double> per_site_stderr;
  /// Site never revisited in some sample; its value used the horizon as gap.
  std::vector<bool> lower_bound;
  int samples = 0;
  std::int64_t horizon = 0;
};

/// Sample seeds are derive_seed(seed, {k}) for k = 0..samples-1.
EmrReport emr_estimate(const GeneratorFactory& factory,
                       const std::vector<PolyUtility>& utilities, int samples,
                       std::int64_t horizon, std::uint64_t seed);

struct EntropyReport {
  double rate = 0.0;
  double stderr = 0.0;
  int steps = 0;
  int samples = 0;
  bool bits = false;
};

/// Average per-step entropy over `steps` steps after the starting visit.
EntropyReport entropy_rate_estimate(const GeneratorFactory& factory, int steps,
                                    int samples, std::uint64_t seed,
                                    bool bits = false);

/// Shannon entropy in nats; zero-probability entries contribute nothing.
double shannon_entropy(const std::vector<double>& dist);

void write_trace_csv(const ScheduleTrace& trace, std::ostream& out);
void write_trace_csv(const ScheduleTrace& trace,
                     const std::filesystem::path& path);
ScheduleTrace read_trace_csv(const std::filesystem::path& path);

nlohmann::json to_json(const EmrReport& r);
nlohmann::json to_json(const EntropyReport& r);

}  // namespace psg
