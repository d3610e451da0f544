#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "psg/decimal.hpp"
#include "psg/error.hpp"
#include "psg/harness.hpp"
#include "psg/instance.hpp"
#include "psg/oracle.hpp"
#include "psg/schedulers.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kResourceError = 3;

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw psg::ValidationError("cannot write " + path);
  out << text;
}

struct InstanceArgs {
  std::string file;
  std::string csv;
  int n = 10;
  double side = 20.0;
  std::uint64_t seed = 1;
  int degree = 0;
  double coef_lo = 0.001;
  double coef_hi = 1.0;
  bool shared = false;
  double penalty = 0.0;

  void attach(CLI::App* app, bool with_file) {
    if (with_file) app->add_option("--instance", file, "instance JSON file");
    app->add_option("--csv", csv, "site CSV (id,x,y[,c0,...])");
    app->add_option("--n", n, "number of sites");
    app->add_option("--side", side, "square side length");
    app->add_option("--seed", seed, "instance seed");
    app->add_option("--degree", degree, "utility degree");
    app->add_option("--coef-lo", coef_lo, "smallest utility coefficient");
    app->add_option("--coef-hi", coef_hi, "largest utility coefficient");
    app->add_flag("--shared", shared, "give every site the same utility");
    app->add_option("--penalty", penalty, "penalty M");
  }

  psg::GraphInstance build() const {
    if (!file.empty()) return psg::load_instance(file).with_penalty(penalty);
    psg::UtilitySpec spec{degree, coef_lo, coef_hi, shared};
    if (!csv.empty()) return psg::load_sites_csv(csv, spec, seed, penalty);
    return psg::generate_random_instance(n, side, seed, spec, penalty);
  }
};

int run_sweep(const std::string& config_path, const std::string& out,
              psg::SweepOutput (*run)(const psg::ExperimentConfig&, int)) {
  auto cfg = psg::load_config(config_path);
  if (!out.empty()) cfg.output = out;
  const auto result = run(cfg, psg::worker_count());
  if (cfg.output.empty()) std::cout << result.csv;
  return result.resource_error ? kResourceError : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Patrol security game simulator"};
  app.require_subcommand(1);

  InstanceArgs gen_args;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen", "generate or load an instance and write it as JSON");
  gen_args.attach(gen, false);
  gen->add_option("--out", gen_out, "output path (default stdout)");

  std::string config, sweep_out;
  auto* frontier = app.add_subcommand("frontier", "EMR and entropy rate per generator and alpha");
  auto* payoff = app.add_subcommand("payoff", "best-response payoff sweep");
  auto* scale = app.add_subcommand("scale", "payoff and wall time across instance sizes");
  for (auto* sub : {frontier, payoff, scale}) {
    sub->add_option("--config", config, "experiment config (JSON)")->required();
    sub->add_option("--out", sweep_out, "CSV output path (overrides the config)");
  }

  InstanceArgs eval_args;
  std::string kind = "tspb", model = "full", trace_out, eval_out, group_order = "tree";
  double alpha = 1.0;
  std::optional<double> cap;
  std::uint64_t eval_seed = 1;
  std::int64_t horizon = 0;
  int traces = 20, t_max = 0;
  auto* eval = app.add_subcommand("eval", "best response against one generator");
  eval_args.attach(eval, true);
  eval->add_option("--generator", kind, "bgt, tspb, bwalk, sg_det or sg_rand");
  eval->add_option("--alpha", alpha, "generator parameter");
  eval->add_option("--cap", cap, "state-graph cap");
  eval->add_option("--group-order", group_order, "tree or roundrobin");
  eval->add_option("--gen-seed", eval_seed, "master seed for sampled traces");
  eval->add_option("--model", model, "full, local or none");
  eval->add_option("--horizon", horizon, "trace horizon in slots (default 20 x T_max)");
  eval->add_option("--traces", traces, "sampled traces");
  eval->add_option("--t-max", t_max, "longest attack (default 4 x diameter)");
  eval->add_option("--trace-out", trace_out, "write the first sampled trace as CSV");
  eval->add_option("--out", eval_out, "report path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*gen) {
      if (gen_args.n < 1) throw psg::ValidationError("--n must be >= 1");
      const auto g = gen_args.build();
      emit(psg::to_json(g).dump(2) + "\n", gen_out);
      std::cerr << "n=" << g.size() << " diameter=" << g.diameter()
                << " max_degree=" << g.max_degree() << "\n";
      return kOk;
    }
    if (*frontier) return run_sweep(config, sweep_out, psg::run_frontier);
    if (*payoff) return run_sweep(config, sweep_out, psg::run_payoff);
    if (*scale) return run_sweep(config, sweep_out, psg::run_scale);
    if (*eval) {
      const auto g = eval_args.build();
      psg::GeneratorSpec spec{kind, alpha, eval_seed, cap, psg::group_order_from_string(group_order)};
      const auto vis = psg::visibility_from_string(model);
      const int tm = t_max > 0 ? t_max : psg::default_attack_horizon(g);
      const std::int64_t hz = horizon > 0 ? horizon : 20 * static_cast<std::int64_t>(tm);
      if (tm >= hz) throw psg::ValidationError("--t-max must be below --horizon");
      const auto factory = psg::make_generator_factory(g, spec);
      const auto sampled = psg::sample_traces(factory, hz, traces, eval_seed);
      if (!trace_out.empty()) psg::write_trace_csv(sampled.front(), trace_out);
      auto report = psg::best_response_from_traces(sampled, g, vis, tm);
      const double zeta = psg::attacker_zeta(g, vis, hz, tm);
      if (zeta > 0.0) report = psg::normalize(report, zeta);
      nlohmann::json j = psg::to_json(report);
      j["generator"] = psg::to_json(spec);
      j["penalty"] = psg::format_real(g.penalty());
      j["horizon"] = hz;
      j["t_max"] = tm;
      emit(j.dump(2) + "\n", eval_out);
      return kOk;
    }
  } catch (const psg::ResourceError& e) {
    std::cerr << "resource error: " << e.what() << "\n";
    return kResourceError;
  } catch (const psg::ValidationError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const psg::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const psg::DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kOk;
}
