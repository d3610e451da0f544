#include <doctest.h>

#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "psg/error.hpp"
#include "psg/oracle.hpp"
#include "psg/schedulers.hpp"

using namespace psg;

namespace {

IntMatrix unit_travel(int n) {
  IntMatrix t(n, n, 1);
  for (int i = 0; i < n; ++i) t(i, i) = 0;
  return t;
}

ScheduleTrace alternation(std::int64_t horizon) {
  return sample_trace(*cyclic_generator(unit_travel(2), {0, 1}), horizon);
}

}  // namespace

TEST_CASE("attack payoff on the alternation") {
  const auto trace = alternation(20);
  const auto one = PolyUtility::constant(1);
  // The patroller is at site 1 at slot 1 and next returns at slot 3.
  CHECK(attack_payoff(trace, 1, 1, 1, one, 0) == 1.0);
  CHECK(attack_payoff(trace, 1, 1, 2, one, 0) == 2.0);
  CHECK(attack_payoff(trace, 1, 1, 2, one, 10) == -8.0);
  CHECK_THROWS_AS(attack_payoff(trace, 1, 15, 6, one, 0), HorizonError);
}

TEST_CASE("attack payoff closed form for unit utility") {
  const auto g = generate_random_instance(5, 12, 4);
  const auto trace = sample_trace(*bwalk_generator(g, 1.2, 2), 300);
  const auto times = visit_times(trace, 5);
  const auto one = PolyUtility::constant(1);
  for (int j = 0; j < 5; ++j)
    for (std::int64_t ts = 0; ts < 250; ts += 7)
      for (int T = 1; T <= 30; T += 3) {
        std::int64_t first = T;
        for (auto t : times[j])
          if (t > ts && t <= ts + T) {
            first = t - ts;
            break;
          }
        CHECK(attack_payoff(trace, j, ts, T, one, 0) == static_cast<double>(first));
      }
}

TEST_CASE("penalty changes realized payoffs by zero or the full step") {
  const auto g = generate_random_instance(6, 25, 8, {1, 0.1, 1.0, false});
  const auto trace = sample_trace(*tspb_generator(g, 0.4, 1), 400);
  for (int j = 0; j < 6; ++j)
    for (std::int64_t ts = 0; ts < 300; ts += 11)
      for (int T = 1; T <= 40; T += 5) {
        const double a = attack_payoff(trace, j, ts, T, g.utility(j), 0.0);
        const double b = attack_payoff(trace, j, ts, T, g.utility(j), 2.5);
        CHECK((a == b || a - b == doctest::Approx(2.5)));
      }
}

TEST_CASE("histograms: serial and parallel agree") {
  const auto g = generate_random_instance(7, 30, 3);
  const auto f = make_generator_factory(g, {"bwalk", 1.3, 0, {}, GroupOrder::tree});
  const auto traces = sample_traces(f, 500, 12, 6);
  const auto s = capture_histogram_serial(traces, 7, 40);
  CHECK(s == capture_histogram_parallel(traces, 7, 40));
  std::int64_t total = 0;
  for (auto e : s.events) total += e;
  CHECK(total > 0);
}

TEST_CASE("alternation best response") {
  const auto g = unit_instance({PolyUtility::constant(1), PolyUtility::constant(1)});
  const std::vector<ScheduleTrace> traces{alternation(200)};
  const auto full = best_response_from_traces(traces, g, Visibility::full, 20);
  CHECK(full.value == 2.0);
  CHECK(full.duration >= 2);
  const auto local = best_response_from_traces(traces, g, Visibility::local, 20);
  CHECK(local.value == 2.0);
  CHECK(local.start_site == local.site);
}

TEST_CASE("monotone in penalty and in visibility on fixed traces") {
  const auto base = generate_random_instance(6, 25, 12, {1, 0.1, 1.0, false});
  const auto f = make_generator_factory(base, {"tspb", 0.5, 0, {}, GroupOrder::tree});
  const auto traces = sample_traces(f, 600, 8, 3);
  for (auto model : {Visibility::full, Visibility::local, Visibility::none}) {
    double prev = std::numeric_limits<double>::infinity();
    for (double m : {0.0, 1.0, 5.0, 25.0}) {
      const auto r = best_response_from_traces(traces, base.with_penalty(m), model, 30);
      CHECK(r.value <= prev);
      prev = r.value;
    }
  }
  for (double m : {0.0, 5.0}) {
    const auto g = base.with_penalty(m);
    const auto full = best_response_from_traces(traces, g, Visibility::full, 30);
    const auto none = best_response_from_traces(traces, g, Visibility::none, 30);
    CHECK(full.value >= none.value);
  }
}

TEST_CASE("Markov generator matches the closed form") {
  Rng rng(21);
  const RealMatrix p = oracle::random_irreducible_chain(3, rng, 0.2);
  const auto travel = unit_travel(3);
  const auto g = unit_instance({PolyUtility::constant(1), PolyUtility::constant(1),
                                PolyUtility::constant(1)});
  const GeneratorFactory f = [&](std::uint64_t seed) {
    return std::make_unique<MarkovGenerator>(travel, p, 0, seed);
  };
  const int t_max = 6;
  const auto traces = sample_traces(f, 400, 500, 2);
  const auto emp = best_response_from_traces(traces, g, Visibility::full, t_max);
  const TransitionMatrix tm(p);
  const auto fv = compute_first_visit(tm, chain_weights(travel), 200);
  const auto exact = payoff_full_visibility(fv, g.utilities(), 0.0, emp.start_site, emp.site,
                                            emp.duration);
  CHECK(std::abs(emp.value - exact.value) <= 3 * emp.stderr + 1e-9);
  const auto best = best_response_markov(tm, fv, g.utilities(), 0.0, Visibility::full, t_max);
  CHECK(std::abs(emp.value - best.value) <= 4 * emp.stderr + 1e-9);
}

TEST_CASE("normalization") {
  PayoffReport r;
  r.value = 4;
  r.stderr = 1;
  const auto n = normalize(r, 2);
  CHECK(*n.normalized == 2.0);
  CHECK(*n.normalized_stderr == 0.5);
  r.value = 0;
  CHECK(*normalize(r, 3).normalized == 0.0);
  CHECK_THROWS_AS(normalize(r, 0), DomainError);

  const auto g = generate_random_instance(8, 40, 5);
  const auto plan = bgt_plan(g);
  const GeneratorFactory f = [&](std::uint64_t s) { return bgt_generator(g, plan, s); };
  const int t_max = default_attack_horizon(g);
  const std::int64_t horizon = 20 * t_max;
  const double zeta = attacker_zeta(g, Visibility::full, horizon, t_max);
  const auto self = best_response_empirical(f, g, Visibility::full, horizon, 3, t_max, 9, zeta);
  CHECK(*self.normalized == 1.0);
  CHECK(self.underestimate_bound == alignment_bound(g));
  CHECK(to_json(self).at("normalized") == "1");
}

TEST_CASE("uncovered cells are reported") {
  const auto g = unit_instance(std::vector<PolyUtility>(3, PolyUtility::constant(1)));
  // Site 2 is never visited.
  const std::vector<ScheduleTrace> traces{
      sample_trace(*cyclic_generator(unit_travel(3), {0, 1}), 100)};
  const auto r = best_response_from_traces(traces, g, Visibility::local, 5);
  CHECK_FALSE(r.warnings.empty());
}
