// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "psg/error.hpp"
#include "psg/harness.hpp"
#include "psg/markov.hpp"
#include "psg/oracle.hpp"
#include "psg/schedulers.hpp"

using namespace psg;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(4);
  o << v;
  return o.str();
}

IntMatrix unit_travel(int n) {
  IntMatrix t(n, n, 1);
  for (int i = 0; i < n; ++i) t(i, i) = 0;
  return t;
}

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

std::vector<PolyUtility> random_utilities(int n, int max_degree, Rng& rng) {
  std::uniform_real_distribution<double> coef(0.1, 2.0);
  std::uniform_int_distribution<int> deg(0, max_degree);
  std::vector<PolyUtility> u;
  for (int i = 0; i < n; ++i) {
    std::vector<double> c(deg(rng) + 1);
    for (auto& x : c) x = coef(rng);
    u.emplace_back(c);
  }
  return u;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

// ---- 1 ----
Outcome markov_vs_enumeration() {
  Rng rng(101);
  int chains = 0, checks = 0;
  double worst = 0.0;
  std::uniform_real_distribution<double> pen(0.0, 3.0);
  for (int k = 0; k < 60; ++k) {
    const int n = 1 + k % 3;
    const auto travel = oracle::random_small_weights(n, 2, rng);
    const RealMatrix p = oracle::random_irreducible_chain(n, rng);
    const auto h = random_utilities(n, 2, rng);
    const double m = pen(rng);
    const auto f = compute_first_visit(TransitionMatrix(p), travel, 8);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int t = 1; t <= 6; ++t) {
          const double got = payoff_full_visibility(f, h, m, i, j, t).value;
          const double want = oracle::path_enumeration_payoff(p, travel, h[j], m, i, j, t);
          worst = std::max(worst, std::abs(got - want) / std::max(std::abs(want), 1e-12));
          ++checks;
        }
    ++chains;
  }
  return {worst <= 1e-6, std::to_string(chains) + " chains, " + std::to_string(checks) +
                             " cells, worst relative error " + fmt(worst)};
}

// Chains shared by criteria 2 and 3.
struct ChainCase {
  RealMatrix p;
  IntMatrix travel;
};

std::vector<ChainCase> hitting_cases() {
  Rng rng(202);
  std::vector<ChainCase> out;
  for (int k = 0; k < 100; ++k) {
    const int n = 2 + k % 7;
    auto travel = oracle::random_small_weights(n, 2, rng);
    auto p = oracle::random_irreducible_chain(n, rng);
    out.push_back({p, travel});
  }
  return out;
}

// ---- 2 ----
Outcome hitting_consistency() {
  double worst = 0.0;
  const auto cases = hitting_cases();
  for (const auto& c : cases) {
    const TransitionMatrix tm(c.p);
    const auto f = compute_first_visit(tm, c.travel, default_k_max(chain_weights(c.travel)));
    const auto approx = compute_hitting_times(f);
    const auto exact = hitting_times_exact(tm, c.travel);
    for (std::size_t i = 0; i < exact.a.rows(); ++i)
      for (std::size_t j = 0; j < exact.a.cols(); ++j)
        worst = std::max(worst, rel_err(approx.a(i, j), exact.a(i, j)));
  }
  return {worst <= 1e-4,
          std::to_string(cases.size()) + " chains n<=8, worst relative error " + fmt(worst)};
}

// ---- 3 ----
Outcome kemeny_invariance() {
  double spread = 0.0;
  for (const auto& c : hitting_cases()) {
    const auto k = kemeny_constant(TransitionMatrix(c.p));
    for (double v : k.per_start) spread = std::max(spread, std::abs(v - k.kappa));
  }
  double cycle_err = 0.0;
  for (int n = 2; n <= 10; ++n) {
    RealMatrix p(n, n, 0.0);
    for (int i = 0; i < n; ++i) p(i, (i + 1) % n) = 1.0;
    cycle_err = std::max(cycle_err, std::abs(kemeny_constant(TransitionMatrix(p)).kappa -
                                             (n + 1) / 2.0));
  }
  return {spread <= 1e-9 && cycle_err <= 1e-12,
          "start spread " + fmt(spread) + ", directed-cycle error " + fmt(cycle_err)};
}

struct ConstantCase {
  RealMatrix p;
  std::vector<PolyUtility> h;
  std::vector<double> hv;
};

std::vector<ConstantCase> constant_cases() {
  Rng rng(404);
  std::uniform_real_distribution<double> hd(0.5, 3.0);
  std::vector<ConstantCase> out;
  for (int k = 0; k < 30; ++k) {
    const int n = 2 + k % 5;
    ConstantCase c{oracle::random_irreducible_chain(n, rng), {}, {}};
    for (int j = 0; j < n; ++j) {
      c.hv.push_back(hd(rng));
      c.h.push_back(PolyUtility::constant(c.hv.back()));
    }
    out.push_back(c);
  }
  return out;
}

// ---- 4 ----
Outcome full_is_max_weighted_hitting_time() {
  double worst = 0.0;
  const auto cases = constant_cases();
  for (const auto& c : cases) {
    const int n = static_cast<int>(c.p.rows());
    const TransitionMatrix tm(c.p);
    const auto travel = unit_travel(n);
    const auto f = compute_first_visit(tm, travel, default_k_max(chain_weights(travel)));
    const auto r = best_response_markov(tm, f, c.h, 0.0, Visibility::full, f.k_max());
    const auto a = hitting_times_exact(tm, travel).a;
    double want = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) want = std::max(want, c.hv[j] * a(i, j));
    worst = std::max(worst, rel_err(r.value, want));
  }
  return {worst <= 1e-3,
          std::to_string(cases.size()) + " chains n<=6, worst relative error " + fmt(worst)};
}

// ---- 5 ----
Outcome none_is_kemeny_times_max() {
  double worst = 0.0;
  int within = 0;
  const auto cases = constant_cases();
  for (const auto& c : cases) {
    const int n = static_cast<int>(c.p.rows());
    const TransitionMatrix tm(c.p);
    const auto travel = unit_travel(n);
    const auto f = compute_first_visit(tm, travel, default_k_max(chain_weights(travel)));
    const auto r = best_response_markov(tm, f, c.h, 0.0, Visibility::none, f.k_max());
    const double want = kemeny_constant(tm).kappa * *std::max_element(c.hv.begin(), c.hv.end());
    const double e = rel_err(r.value, want);
    within += e <= 1e-3;
    worst = std::max(worst, e);
  }
  return {worst <= 1e-3, std::to_string(within) + "/" + std::to_string(cases.size()) +
                             " chains within 1e-3, worst relative error " + fmt(worst)};
}

// ---- 6 ----
Outcome tspb_law() {
  double worst_tv = 0.0, worst_plugin = 0.0, worst_rate = 0.0;
  for (int n : {2, 5}) {
    Tour tour;
    for (int i = 0; i < n; ++i) tour.order.push_back(i);
    tour.length = n;
    for (double a : {0.3, 0.5, 0.8}) {
      const auto gamma = tspb_next_distribution(a, n);
      auto gen = tspb_generator(unit_travel(n), tour, a, 17);
      int prev = gen->next().site;
      const int steps = 100000;
      std::vector<double> freq(n, 0.0);
      for (int s = 0; s < steps; ++s) {
        const int cur = gen->next().site;
        freq[(cur - prev + n) % n] += 1.0 / steps;
        prev = cur;
      }
      const double h = shannon_entropy(gamma);
      worst_tv = std::max(worst_tv, oracle::total_variation(freq, gamma));
      worst_plugin = std::max(worst_plugin, rel_err(shannon_entropy(freq), h));
      const GeneratorFactory f = [&](std::uint64_t s) {
        return tspb_generator(unit_travel(n), tour, a, s);
      };
      worst_rate = std::max(worst_rate, rel_err(entropy_rate_estimate(f, steps, 1, 5).rate, h));
    }
  }
  return {worst_tv <= 0.02 && worst_plugin <= 0.01 && worst_rate <= 0.01,
          "worst TV " + fmt(worst_tv) + ", plug-in entropy error " + fmt(worst_plugin) +
              ", exposed entropy-rate error " + fmt(worst_rate)};
}

// ---- 7 ----
Outcome beta_series() {
  double worst = 0.0;
  std::uint64_t seed = 7;
  for (double a : {0.3, 0.5, 0.9})
    for (int n : {1, 4, 8})
      worst = std::max(worst, rel_err(expected_rounds_beta(a, n),
                                      oracle::monte_carlo_beta(a, n, 100000, ++seed)));
  return {worst <= 0.02, "worst relative gap to Monte-Carlo " + fmt(worst)};
}

double tree_law_tv(const IntMatrix& travel, double alpha, int draws, std::uint64_t seed) {
  const int m = static_cast<int>(travel.rows());
  const auto w = bwalk_edge_weights(travel, alpha);
  const auto p = bwalk_transition(travel, alpha);
  std::map<oracle::TreeKey, double> want, got;
  double z = 0.0;
  for (const auto& t : oracle::spanning_trees(m)) {
    double prod = 1.0;
    for (auto [a, b] : t) prod *= w(a, b);
    want[t] = prod;
    z += prod;
  }
  Rng rng(seed);
  for (int d = 0; d < draws; ++d)
    got[oracle::tree_key(bwalk_random_spanning_tree(p, d % m, rng).parent)] += 1.0 / draws;
  double tv = 0.0;
  for (const auto& [k, v] : want) tv += std::abs(v / z - got[k]);
  for (const auto& [k, v] : got)
    if (!want.count(k)) tv += v;
  return tv / 2;
}

// ---- 8 ----
Outcome bwalk_trees() {
  IntMatrix tri(3, 3, 0);
  tri(0, 1) = tri(1, 0) = 1;
  tri(1, 2) = tri(2, 1) = 2;
  tri(0, 2) = tri(2, 0) = 3;
  IntMatrix k4(4, 4, 0);
  const int wk[4][4] = {{0, 1, 2, 3}, {1, 0, 1, 2}, {2, 1, 0, 3}, {3, 2, 3, 0}};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) k4(i, j) = wk[i][j];
  const double tv3 = tree_law_tv(tri, 2.0, 200000, 31);
  const double tv4 = tree_law_tv(k4, 1.5, 200000, 32);

  bool covered = true, short_rounds = true;
  int rounds = 0;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto g = generate_random_instance(10, 20, seed, {0, 1, 1, true});
    BwalkStream stream(bwalk_model(g, 1.25), g.travel(), seed);
    const int n = g.size();
    const std::int64_t bound = 2LL * n * g.diameter();
    std::set<int> seen;
    int last = -1;
    std::int64_t length = 0;
    for (int step = 0; step < 20000; ++step) {
      const auto s = stream.next_step();
      if (s.distribution && !seen.empty()) {
        covered = covered && static_cast<int>(seen.size()) == n;
        short_rounds = short_rounds && length <= bound;
        seen.clear();
        length = 0;
        ++rounds;
      } else if (last >= 0) {
        length += g.transit(last, s.site);
      }
      seen.insert(s.site);
      last = s.site;
    }
  }
  return {tv3 <= 0.05 && tv4 <= 0.05 && covered && short_rounds,
          "triangle TV " + fmt(tv3) + ", K4 TV " + fmt(tv4) + ", " + std::to_string(rounds) +
              " rounds, all cover: " + (covered ? "yes" : "no") +
              ", all within 2n*diameter: " + (short_rounds ? "yes" : "no")};
}

// ---- 9 ----
Outcome sg_optimality() {
  const std::vector<PolyUtility> options{PolyUtility({1.0}), PolyUtility({2.0}),
                                         PolyUtility({0.0, 1.0}), PolyUtility({1.0, 1.0}),
                                         PolyUtility({2.0, 1.0})};
  int instances = 0, mismatches = 0;
  std::string first_bad;
  for (int n = 1; n <= 3; ++n) {
    int combos = 1;
    for (int i = 0; i < n; ++i) combos *= static_cast<int>(options.size());
    for (int code = 0; code < combos; ++code) {
      std::vector<PolyUtility> u;
      for (int i = 0, c = code; i < n; ++i, c /= static_cast<int>(options.size()))
        u.push_back(options[c % options.size()]);
      const auto g = unit_instance(u);
      const auto cyc = sg_optimal_deterministic(sg_build(g, sg_default_cap(g)));
      const double want = oracle::best_periodic_bottleneck(g, 2 * n);
      ++instances;
      if (cyc.bottleneck != want) {
        ++mismatches;
        if (first_bad.empty())
          first_bad = ", first mismatch n=" + std::to_string(n) + " code " +
                      std::to_string(code) + ": " + fmt(cyc.bottleneck) + " vs " + fmt(want);
      }
    }
  }
  return {mismatches == 0, std::to_string(instances) + " instances, " +
                               std::to_string(mismatches) + " mismatches" + first_bad};
}

// Setup shared by criteria 10 and 11.
nlohmann::json sweep_config() {
  return nlohmann::json::parse(R"({
    "instance": {"n": 10, "side": 20, "seed": 5},
    "generators": [{"kind": "bgt"}, {"kind": "tspb", "alpha": 0.5},
                   {"kind": "bwalk", "alpha": 1.25}, {"kind": "sg_rand", "alpha": 40}],
    "models": ["full", "local", "none"],
    "penalties": [0, 2, 5, 10, 20],
    "traces": 20,
    "replications": 10,
    "seed": 2024
  })");
}

// ---- 10 ----
Outcome penalty_monotone() {
  const auto out = run_payoff(config_from_json(sweep_config()), worker_count());
  // generator,alpha,model,penalty,value,normalized,stderr,site,duration,status
  std::map<std::pair<std::string, std::string>, std::vector<std::pair<double, double>>> series;
  int bad_status = 0;
  for (const auto& r : parse_csv(out.csv)) {
    if (r.size() < 10 || r[9] != "ok") {
      ++bad_status;
      continue;
    }
    series[{r[0], r[2]}].push_back({std::stod(r[5]), std::stod(r[6])});
  }
  int violations = 0, steps = 0;
  double worst = -1e300;
  for (const auto& [key, v] : series)
    for (std::size_t k = 1; k < v.size(); ++k) {
      const double slack = 2 * std::max(v[k].second, v[k - 1].second);
      const double rise = v[k].first - v[k - 1].first;
      worst = std::max(worst, rise - slack);
      violations += rise > slack;
      ++steps;
    }
  return {violations == 0 && bad_status == 0 && steps == 4 * 3 * 4,
          std::to_string(series.size()) + " generator/model series, " + std::to_string(steps) +
              " steps, " + std::to_string(violations) + " rises beyond 2 stderr, " +
              std::to_string(bad_status) + " failed cells"};
}

// ---- 11 ----
Outcome visibility_order() {
  const auto cfg = config_from_json(sweep_config());
  const auto g0 = build_instance(cfg.instance);
  const int t_max = default_attack_horizon(g0);
  const std::int64_t horizon = 20LL * t_max;
  int violations = 0, cells = 0;
  std::string detail;
  for (std::size_t gi = 0; gi < cfg.generators.size(); ++gi) {
    const auto& grid = cfg.generators[gi];
    const GeneratorSpec spec{grid.kind, grid.alphas[0], 0, grid.cap, grid.group_order};
    const auto factory = make_generator_factory(g0, spec);
    std::vector<std::vector<ScheduleTrace>> reps;
    for (int r = 0; r < cfg.replications; ++r)
      reps.push_back(sample_traces(factory, horizon, cfg.traces, derive_seed(cfg.seed, {gi, 0, static_cast<std::uint64_t>(r)})));
    for (double m : cfg.penalties) {
      const auto g = g0.with_penalty(m);
      std::vector<std::vector<double>> v(3);
      const Visibility models[3] = {Visibility::full, Visibility::local, Visibility::none};
      for (const auto& traces : reps)
        for (int k = 0; k < 3; ++k) v[k].push_back(best_response_from_traces(traces, g, models[k], t_max).value);
      auto mean_se = [](const std::vector<double>& x) {
        double mu = 0.0;
        for (double a : x) mu += a;
        mu /= x.size();
        double ss = 0.0;
        for (double a : x) ss += (a - mu) * (a - mu);
        return std::pair{mu, std::sqrt(ss / (x.size() - 1) / x.size())};
      };
      const auto [f, fs] = mean_se(v[0]);
      const auto [l, ls] = mean_se(v[1]);
      const auto [nn, ns] = mean_se(v[2]);
      cells += 2;
      violations += l - f > 2 * std::max(fs, ls);
      violations += nn - l > 2 * std::max(ls, ns);
    }
  }
  return {violations == 0, std::to_string(cells) + " orderings checked on shared traces, " +
                               std::to_string(violations) + " violations"};
}

// ---- 12 ----
Outcome frontier_shape() {
  auto j = nlohmann::json::parse(R"({
    "instance": {"n": 10, "side": 20, "seed": 5, "shared": true},
    "generators": [{"kind": "bgt"},
                   {"kind": "tspb", "alphas": [1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2]}],
    "emr_samples": 20,
    "entropy_steps": 2000,
    "entropy_samples": 4,
    "seed": 12
  })");
  const auto out = run_frontier(config_from_json(j), worker_count());
  // generator,alpha,emr,emr_normalized,emr_stderr,entropy,entropy_stderr,lower_bound,status
  std::vector<double> alpha, emr, ent;
  bool anchor = false;
  for (const auto& r : parse_csv(out.csv)) {
    if (r[0] == "bgt") anchor = std::stod(r[3]) == 1.0 && std::stod(r[5]) == 0.0 && r[8] == "ok";
    if (r[0] == "tspb" && r[8] == "ok") {
      alpha.push_back(std::stod(r[1]));
      emr.push_back(std::stod(r[3]));
      ent.push_back(std::stod(r[5]));
    }
  }
  const double se = oracle::spearman(alpha, emr);
  const double sh = oracle::spearman(alpha, ent);
  return {alpha.size() >= 8 && se <= -0.8 && sh <= -0.8 && anchor,
          std::to_string(alpha.size()) + " alphas, Spearman(alpha, EMR) " + fmt(se) +
              ", Spearman(alpha, entropy) " + fmt(sh) + ", BGT anchor " +
              (anchor ? "(1, 0)" : "off")};
}

// ---- 13 ----
Outcome markov_cross_check() {
  Rng rng(1313);
  int checks = 0, violations = 0;
  double worst = 0.0;
  std::string worst_case;
  for (int n = 2; n <= 4; ++n) {
    const RealMatrix p = oracle::random_irreducible_chain(n, rng, 0.15);
    const auto travel = oracle::random_small_weights(n, 2, rng);
    const auto u = random_utilities(n, 1, rng);
    std::vector<Site> sites(n);
    for (int i = 0; i < n; ++i) sites[i] = {i, double(i), 0.0};
    const GraphInstance g(sites, travel, u, 1.5);
    const TransitionMatrix tm(p);
    const int t_max = 8;
    const auto f = compute_first_visit(tm, travel, default_k_max(chain_weights(travel)));
    // Stationary start, as the no-visibility closed form assumes.
    const auto pi = stationary_distribution(tm);
    const GeneratorFactory factory = [&](std::uint64_t s) {
      Rng pick(derive_seed(s, {1}));
      return std::make_unique<MarkovGenerator>(travel, p, static_cast<int>(sample_index(pi, pick)), s);
    };
    const auto traces = sample_traces(factory, 400, 10000, 77 + n);
    for (auto model : {Visibility::full, Visibility::local, Visibility::none}) {
      const auto emp = best_response_from_traces(traces, g, model, t_max);
      const auto exact = best_response_markov(tm, f, u, g.penalty(), model, t_max);
      const double z = std::abs(emp.value - exact.value) / std::max(emp.stderr, 1e-12);
      if (z > worst)
        worst_case = " (n=" + std::to_string(n) + ", " + to_string(model) + ": " + fmt(emp.value) +
                     " vs " + fmt(exact.value) + ")";
      worst = std::max(worst, z);
      violations += z > 3.0;
      ++checks;
    }
  }
  return {violations == 0, std::to_string(checks) + " chain/model pairs, worst gap " +
                               fmt(worst) + " stderr" + worst_case};
}

// ---- 14 ----
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome cli_determinism(const std::string& cli) {
  if (cli.empty()) return {false, "no CLI path given"};
  const fs::path dir = fs::temp_directory_path() / ("psg_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const nlohmann::json cfg = nlohmann::json::parse(R"({
    "instance": {"n": 6, "side": 15, "seed": 9, "degree": 1},
    "generators": [{"kind": "bgt"}, {"kind": "tspb", "alphas": [1.0, 0.4]},
                   {"kind": "bwalk", "alphas": [1.2]}, {"kind": "sg_rand", "alphas": [30]}],
    "penalties": [0, 3],
    "sizes": [4, 6],
    "traces": 4,
    "replications": 3,
    "emr_samples": 4,
    "entropy_steps": 400,
    "entropy_samples": 2,
    "seed": 99
  })");
  std::ofstream(dir / "config.json") << cfg.dump(2);
  const std::string c = (dir / "config.json").string();
  const std::vector<std::pair<std::string, std::string>> commands{
      {"gen", "gen --n 30 --side 1000 --seed 1 --degree 2"},
      {"frontier", "frontier --config " + c},
      {"payoff", "payoff --config " + c},
      {"scale", "scale --config " + c},
      {"eval", "eval --n 8 --side 20 --seed 4 --generator bwalk --alpha 1.3 --traces 6 --gen-seed 3"},
  };
  std::vector<std::string> differ;
  for (const auto& [name, args] : commands) {
    std::string outputs[2];
    for (int run = 0; run < 2; ++run) {
      const fs::path out = dir / (name + std::to_string(run) + ".out");
      // The second run uses a different worker count.
      const std::string env = run == 0 ? "PSG_WORKERS=1 " : "PSG_WORKERS=3 ";
      const std::string cmd = env + "\"" + cli + "\" " + args + " --out \"" + out.string() +
                              "\" 2>/dev/null";
      if (std::system(cmd.c_str()) != 0) {
        differ.push_back(name + " (exit status)");
        break;
      }
      outputs[run] = slurp(out);
    }
    if (outputs[0].empty() || outputs[0] != outputs[1]) differ.push_back(name);
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  std::string detail = std::to_string(commands.size()) + " commands run twice";
  if (!differ.empty()) {
    detail += ", differing:";
    for (const auto& d : differ) detail += " " + d;
  } else {
    detail += ", byte-identical outputs";
  }
  return {differ.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"Markov payoff matches path enumeration", markov_vs_enumeration},
      {"truncated hitting times match the linear solve", hitting_consistency},
      {"Kemeny constant is start independent", kemeny_invariance},
      {"full-visibility value is the max weighted hitting time", full_is_max_weighted_hitting_time},
      {"no-visibility value is Kemeny constant times max utility", none_is_kemeny_times_max},
      {"TSP-b next-position law and entropy", tspb_law},
      {"expected round count series", beta_series},
      {"Bwalk spanning-tree law and rounds", bwalk_trees},
      {"state-graph optimum equals exhaustive periodic search", sg_optimality},
      {"payoff non-increasing in penalty", penalty_monotone},
      {"full >= local >= none on shared traces", visibility_order},
      {"TSP-b frontier trend and BGT anchor", frontier_shape},
      {"empirical best response matches Markov closed form", markov_cross_check},
      {"CLI reruns are byte-identical", [&] { return cli_determinism(cli); }},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << k + 1 << ": "
              << criteria[k].first << " (" << o.detail << "; " << fmt(secs) << " s)"
              << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
