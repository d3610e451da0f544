#include "psg/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "psg/decimal.hpp"
#include "psg/error.hpp"
#include "psg/oracle.hpp"
#include "psg/rng.hpp"
#include "psg/schedulers.hpp"

namespace psg {

namespace {

using nlohmann::json;

double real_value(const json& v, const std::string& field) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    try {
      return parse_real(v.get<std::string>());
    } catch (const ParseError&) {
    }
  }
  throw ValidationError("config field '" + field + "' must be a number");
}

template <class T>
T int_value(const json& v, const std::string& field) {
  if (!v.is_number_integer() || (std::is_unsigned_v<T> && v.get<std::int64_t>() < 0))
    throw ValidationError("config field '" + field + "' must be a nonnegative integer");
  return v.get<T>();
}

void reject_unknown(const json& obj, const std::set<std::string>& known,
                    const std::string& where) {
  for (const auto& [key, _] : obj.items())
    if (!known.count(key))
      throw ValidationError("unknown config field '" + where + key + "'");
}

InstanceSource instance_from(const json& j) {
  if (!j.is_object()) throw ValidationError("config field 'instance' must be an object");
  reject_unknown(j, {"n", "side", "seed", "degree", "coef_lo", "coef_hi", "shared", "csv", "file",
                     "penalty"},
                 "instance.");
  InstanceSource s;
  if (j.contains("csv") && j.contains("file"))
    throw ValidationError("instance: give either 'csv' or 'file', not both");
  if (j.contains("csv")) {
    s.kind = InstanceSource::Kind::csv;
    s.path = j["csv"].get<std::string>();
  }
  if (j.contains("file")) {
    s.kind = InstanceSource::Kind::file;
    s.path = j["file"].get<std::string>();
  }
  if (j.contains("n")) s.n = int_value<int>(j["n"], "instance.n");
  if (j.contains("side")) s.side = real_value(j["side"], "instance.side");
  if (j.contains("seed")) s.seed = int_value<std::uint64_t>(j["seed"], "instance.seed");
  if (j.contains("degree")) s.utility.degree = int_value<int>(j["degree"], "instance.degree");
  if (j.contains("coef_lo")) s.utility.coef_lo = real_value(j["coef_lo"], "instance.coef_lo");
  if (j.contains("coef_hi")) s.utility.coef_hi = real_value(j["coef_hi"], "instance.coef_hi");
  if (j.contains("shared")) s.utility.shared = j["shared"].get<bool>();
  if (j.contains("penalty")) s.penalty = real_value(j["penalty"], "instance.penalty");
  return s;
}

GeneratorGrid grid_from(const json& j) {
  if (!j.is_object()) throw ValidationError("each generator entry must be an object");
  reject_unknown(j, {"kind", "alphas", "alpha", "cap", "group_order"}, "generators[].");
  GeneratorGrid g;
  if (!j.contains("kind")) throw ValidationError("generator entry lacks 'kind'");
  g.kind = j["kind"].get<std::string>();
  if (j.contains("alphas")) {
    if (!j["alphas"].is_array()) throw ValidationError("'alphas' must be an array");
    for (const auto& a : j["alphas"]) g.alphas.push_back(real_value(a, "alphas"));
  }
  if (j.contains("alpha")) g.alphas.push_back(real_value(j["alpha"], "alpha"));
  if (j.contains("cap")) g.cap = real_value(j["cap"], "cap");
  if (j.contains("group_order"))
    g.group_order = group_order_from_string(j["group_order"].get<std::string>());
  return g;
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  reject_unknown(j, {"instance", "generators", "models", "penalties", "horizon", "t_max",
                     "traces", "replications", "seed", "sizes", "emr_samples", "entropy_steps",
                     "entropy_samples", "max_states", "output", "timing_output", "best_output"},
                 "");
  ExperimentConfig c;
  try {
    if (j.contains("instance")) c.instance = instance_from(j["instance"]);
    if (j.contains("generators"))
      for (const auto& g : j["generators"]) c.generators.push_back(grid_from(g));
    if (j.contains("models")) {
      c.models.clear();
      for (const auto& m : j["models"]) c.models.push_back(visibility_from_string(m.get<std::string>()));
    }
    if (j.contains("penalties")) {
      c.penalties.clear();
      for (const auto& p : j["penalties"]) c.penalties.push_back(real_value(p, "penalties"));
    }
    if (j.contains("horizon")) c.horizon = int_value<std::int64_t>(j["horizon"], "horizon");
    if (j.contains("t_max")) c.t_max = int_value<int>(j["t_max"], "t_max");
    if (j.contains("traces")) c.traces = int_value<int>(j["traces"], "traces");
    if (j.contains("replications")) c.replications = int_value<int>(j["replications"], "replications");
    if (j.contains("seed")) c.seed = int_value<std::uint64_t>(j["seed"], "seed");
    if (j.contains("sizes"))
      for (const auto& n : j["sizes"]) c.sizes.push_back(int_value<int>(n, "sizes"));
    if (j.contains("emr_samples")) c.emr_samples = int_value<int>(j["emr_samples"], "emr_samples");
    if (j.contains("entropy_steps")) c.entropy_steps = int_value<int>(j["entropy_steps"], "entropy_steps");
    if (j.contains("entropy_samples"))
      c.entropy_samples = int_value<int>(j["entropy_samples"], "entropy_samples");
    if (j.contains("max_states")) c.max_states = int_value<std::size_t>(j["max_states"], "max_states");
    if (j.contains("output")) c.output = j["output"].get<std::string>();
    if (j.contains("timing_output")) c.timing_output = j["timing_output"].get<std::string>();
    if (j.contains("best_output")) c.best_output = j["best_output"].get<std::string>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  for (auto& g : c.generators)
    if (g.alphas.empty() && (g.kind == "bgt" || g.kind == "sg_det")) g.alphas.push_back(1.0);
  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

void validate_config(const ExperimentConfig& c) {
  if (c.generators.empty()) throw ValidationError("config lists no generators");
  for (const auto& g : c.generators) {
    if (g.alphas.empty())
      throw ValidationError("generator " + g.kind + " needs an alpha grid in " + alpha_domain(g.kind));
    for (double a : g.alphas) validate_generator_spec({g.kind, a, 0, g.cap, g.group_order});
  }
  if (c.models.empty()) throw ValidationError("config lists no visibility models");
  if (c.penalties.empty()) throw ValidationError("penalty grid is empty");
  for (std::size_t k = 0; k < c.penalties.size(); ++k) {
    if (!(c.penalties[k] >= 0.0)) throw ValidationError("penalties must be nonnegative");
    if (k > 0 && !(c.penalties[k] > c.penalties[k - 1]))
      throw ValidationError("penalty grid must be strictly ascending");
  }
  if (c.traces < 1) throw ValidationError("traces must be >= 1");
  if (c.replications < 1) throw ValidationError("replications must be >= 1");
  if (c.horizon > 0 && c.t_max > 0 && c.t_max >= c.horizon)
    throw ValidationError("t_max must be below the horizon");
  for (std::size_t k = 0; k < c.sizes.size(); ++k)
    if (c.sizes[k] < 1 || (k > 0 && c.sizes[k] <= c.sizes[k - 1]))
      throw ValidationError("sizes must be positive and strictly ascending");
  if (c.emr_samples < 1 || c.entropy_steps < 1 || c.entropy_samples < 1)
    throw ValidationError("emr_samples, entropy_steps and entropy_samples must be >= 1");
  if (c.instance.kind == InstanceSource::Kind::random) {
    if (c.instance.n < 1) throw ValidationError("instance.n must be >= 1");
    if (!(c.instance.side > 0.0)) throw ValidationError("instance.side must be positive");
  }
}

GraphInstance build_instance(const InstanceSource& src, int n_override) {
  switch (src.kind) {
    case InstanceSource::Kind::csv:
      return load_sites_csv(src.path, src.utility, src.seed, src.penalty);
    case InstanceSource::Kind::file:
      return load_instance(src.path).with_penalty(src.penalty);
    case InstanceSource::Kind::random:
      break;
  }
  return generate_random_instance(n_override > 0 ? n_override : src.n, src.side, src.seed,
                                  src.utility, src.penalty);
}

int worker_count() {
  if (const char* env = std::getenv("PSG_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

void run_jobs(std::size_t count, int workers, const std::function<void(std::size_t)>& job) {
  std::atomic<std::size_t> next{0};
  const auto loop = [&] {
    for (std::size_t k = next++; k < count; k = next++) job(k);
  };
  const int extra = std::max(0, std::min<int>(workers, static_cast<int>(count)) - 1);
  std::vector<std::thread> pool;
  for (int w = 0; w < extra; ++w) pool.emplace_back(loop);
  loop();
  for (auto& t : pool) t.join();
}

std::string status_of(const std::exception& e) {
  if (dynamic_cast<const ResourceError*>(&e)) return "resource_error";
  if (dynamic_cast<const NoFeasibleSchedule*>(&e)) return "no_feasible_schedule";
  return "error";
}

struct Job {
  std::size_t grid = 0;
  std::size_t alpha = 0;
  GeneratorSpec spec;
};

std::vector<Job> expand(const ExperimentConfig& c) {
  std::vector<Job> jobs;
  for (std::size_t g = 0; g < c.generators.size(); ++g) {
    const auto& grid = c.generators[g];
    for (std::size_t a = 0; a < grid.alphas.size(); ++a)
      jobs.push_back({g, a, {grid.kind, grid.alphas[a], 0, grid.cap, grid.group_order}});
  }
  return jobs;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

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

int resolved_t_max(const ExperimentConfig& c, const GraphInstance& g) {
  return c.t_max > 0 ? c.t_max : default_attack_horizon(g);
}

std::int64_t resolved_horizon(const ExperimentConfig& c, int t_max) {
  return c.horizon > 0 ? c.horizon : 20 * static_cast<std::int64_t>(t_max);
}

// Replicated evaluation of one generator over every (model, penalty) pair.
struct CellStats {
  double value = 0.0;
  std::optional<double> normalized;
  double stderr = 0.0;
  int site = -1;
  int duration = 0;
};

std::vector<CellStats> evaluate_cells(const GeneratorFactory& factory, const GraphInstance& g,
                                      const ExperimentConfig& c, std::size_t grid,
                                      std::size_t alpha, std::int64_t horizon, int t_max,
                                      const std::vector<Visibility>& models,
                                      const std::vector<double>& penalties,
                                      const std::vector<double>& zeta) {
  const std::size_t cells = models.size() * penalties.size();
  std::vector<std::vector<PayoffReport>> reps(cells);
  std::vector<GraphInstance> priced;
  for (double m : penalties) priced.push_back(g.with_penalty(m));
  for (int r = 0; r < c.replications; ++r) {
    const auto traces = sample_traces(factory, horizon, c.traces,
                                      derive_seed(c.seed, {grid, alpha, std::uint64_t(r)}));
    for (std::size_t mi = 0; mi < models.size(); ++mi)
      for (std::size_t pi = 0; pi < penalties.size(); ++pi)
        reps[mi * penalties.size() + pi].push_back(
            best_response_from_traces(traces, priced[pi], models[mi], t_max));
  }
  std::vector<CellStats> out(cells);
  for (std::size_t k = 0; k < cells; ++k) {
    std::vector<double> raw, norm;
    std::map<std::pair<int, int>, int> argmax;
    for (const auto& rep : reps[k]) {
      raw.push_back(rep.value);
      if (zeta[k] > 0.0) norm.push_back(rep.value / zeta[k]);
      ++argmax[{rep.site, rep.duration}];
    }
    auto& cell = out[k];
    const auto rv = mean_se(raw);
    cell.value = rv.mean;
    cell.stderr = rv.se;
    if (!norm.empty()) {
      const auto nv = mean_se(norm);
      cell.normalized = nv.mean;
      cell.stderr = nv.se;
    }
    int best = -1;
    for (const auto& [key, count] : argmax)
      if (count > best) {
        best = count;
        cell.site = key.first;
        cell.duration = key.second;
      }
  }
  return out;
}

void write_or_keep(const std::string& path, const std::string& text) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write output file " + path);
  out << text;
}

}  // namespace

SweepOutput run_frontier(const ExperimentConfig& c, int workers) {
  const GraphInstance g = build_instance(c.instance);
  const BgtPlan plan = bgt_plan(g);
  const GeneratorFactory bgt = [&](std::uint64_t) { return bgt_generator(g, plan); };
  const std::int64_t horizon = std::max<std::int64_t>(c.horizon, 8 * coverage_horizon(bgt, 3));
  const double emr_bgt = emr_estimate(bgt, g.utilities(), 1, horizon, 0).emr;

  const auto jobs = expand(c);
  std::vector<std::string> rows(jobs.size()), timing(jobs.size());
  std::vector<char> resource(jobs.size(), 0);
  run_jobs(jobs.size(), workers, [&](std::size_t k) {
    const auto& job = jobs[k];
    const auto t0 = std::chrono::steady_clock::now();
    std::ostringstream row;
    row << job.spec.kind << ',' << format_real(job.spec.alpha) << ',';
    try {
      const auto factory = make_generator_factory(g, job.spec, c.max_states);
      const std::uint64_t seed = derive_seed(c.seed, {job.grid, job.alpha});
      const auto emr = emr_estimate(factory, g.utilities(), c.emr_samples, horizon,
                                    derive_seed(seed, {0}));
      const auto ent = entropy_rate_estimate(factory, c.entropy_steps, c.entropy_samples,
                                             derive_seed(seed, {1}));
      const bool lower = std::any_of(emr.lower_bound.begin(), emr.lower_bound.end(),
                                     [](bool b) { return b; });
      row << format_real(emr.emr) << ',' << format_real(emr.emr / emr_bgt) << ','
          << format_real(emr.stderr / emr_bgt) << ',' << format_real(ent.rate) << ','
          << format_real(ent.stderr) << ',' << (lower ? 1 : 0) << ",ok";
    } catch (const Error& e) {
      resource[k] = dynamic_cast<const ResourceError*>(&e) != nullptr;
      row << ",,,,,," << status_of(e);
    }
    rows[k] = row.str();
    timing[k] = job.spec.kind + ',' + format_real(job.spec.alpha) + ',' +
                format_real(seconds_since(t0));
  });
  SweepOutput out;
  out.csv = "generator,alpha,emr,emr_normalized,emr_stderr,entropy,entropy_stderr,lower_bound,status\n";
  out.timing_csv = "generator,alpha,seconds\n";
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    out.csv += rows[k] + '\n';
    out.timing_csv += timing[k] + '\n';
    out.resource_error = out.resource_error || resource[k];
  }
  write_or_keep(c.output, out.csv);
  write_or_keep(c.timing_output, out.timing_csv);
  return out;
}

SweepOutput run_payoff(const ExperimentConfig& c, int workers) {
  const GraphInstance g = build_instance(c.instance);
  const int t_max = resolved_t_max(c, g);
  const std::int64_t horizon = resolved_horizon(c, t_max);
  if (t_max >= horizon) throw ValidationError("t_max must be below the horizon");
  const std::size_t np = c.penalties.size();
  // One zeta per model, the BGT payoff at M = 0, so every penalty of a model
  // shares the same scale.
  std::vector<double> base(c.models.size());
  run_jobs(base.size(), workers, [&](std::size_t k) {
    base[k] = attacker_zeta(g.with_penalty(0.0), c.models[k], horizon, t_max);
  });
  std::vector<double> zeta(c.models.size() * np);
  for (std::size_t k = 0; k < zeta.size(); ++k) zeta[k] = base[k / np];

  const auto jobs = expand(c);
  std::vector<std::vector<CellStats>> results(jobs.size());
  std::vector<std::string> status(jobs.size(), "ok");
  std::vector<double> seconds(jobs.size());
  run_jobs(jobs.size(), workers, [&](std::size_t k) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const auto factory = make_generator_factory(g, jobs[k].spec, c.max_states);
      results[k] = evaluate_cells(factory, g, c, jobs[k].grid, jobs[k].alpha, horizon, t_max,
                                  c.models, c.penalties, zeta);
    } catch (const Error& e) {
      status[k] = status_of(e);
    }
    seconds[k] = seconds_since(t0);
  });

  SweepOutput out;
  out.csv = payoff_csv_header() + ",status\n";
  out.timing_csv = "generator,alpha,seconds\n";
  std::ostringstream csv;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    const auto& spec = jobs[k].spec;
    out.timing_csv += spec.kind + ',' + format_real(spec.alpha) + ',' + format_real(seconds[k]) + '\n';
    out.resource_error = out.resource_error || status[k] == "resource_error";
    for (std::size_t mi = 0; mi < c.models.size(); ++mi)
      for (std::size_t pi = 0; pi < np; ++pi) {
        csv << spec.kind << ',' << format_real(spec.alpha) << ',' << to_string(c.models[mi]) << ','
            << format_real(c.penalties[pi]) << ',';
        if (status[k] != "ok") {
          csv << ",,,,," << status[k] << '\n';
          continue;
        }
        const auto& cell = results[k][mi * np + pi];
        csv << format_real(cell.value) << ','
            << (cell.normalized ? format_real(*cell.normalized) : "") << ','
            << format_real(cell.stderr) << ',' << cell.site << ',' << cell.duration << ','
            << (cell.normalized ? "ok" : "zeta_nonpositive") << '\n';
      }
  }
  out.csv += csv.str();

  std::ostringstream best;
  best << "generator,model,penalty,alpha,normalized,stderr\n";
  for (std::size_t gi = 0; gi < c.generators.size(); ++gi)
    for (std::size_t mi = 0; mi < c.models.size(); ++mi)
      for (std::size_t pi = 0; pi < np; ++pi) {
        const CellStats* chosen = nullptr;
        double alpha = 0.0;
        for (std::size_t k = 0; k < jobs.size(); ++k) {
          if (jobs[k].grid != gi || status[k] != "ok") continue;
          const auto& cell = results[k][mi * np + pi];
          const double v = cell.normalized.value_or(cell.value);
          if (!chosen || v < chosen->normalized.value_or(chosen->value)) {
            chosen = &cell;
            alpha = jobs[k].spec.alpha;
          }
        }
        best << c.generators[gi].kind << ',' << to_string(c.models[mi]) << ','
             << format_real(c.penalties[pi]) << ',';
        if (!chosen) {
          best << ",,\n";
          continue;
        }
        best << format_real(alpha) << ','
             << format_real(chosen->normalized.value_or(chosen->value)) << ','
             << format_real(chosen->stderr) << '\n';
      }
  out.best_csv = best.str();
  write_or_keep(c.output, out.csv);
  write_or_keep(c.timing_output, out.timing_csv);
  write_or_keep(c.best_output, out.best_csv);
  return out;
}

SweepOutput run_scale(const ExperimentConfig& c, int workers) {
  if (c.sizes.empty()) throw ValidationError("scale run needs a 'sizes' grid");
  if (c.instance.kind != InstanceSource::Kind::random)
    throw ValidationError("scale run needs a random instance source");
  InstanceSource src = c.instance;
  src.utility.degree = 0;
  src.penalty = 0.0;
  const auto jobs = expand(c);
  const std::size_t per_size = jobs.size();
  const std::size_t total = per_size * c.sizes.size();
  std::vector<std::string> rows(total), timing(total);
  std::vector<char> resource(total, 0);

  std::vector<GraphInstance> instances;
  std::vector<double> zeta;
  std::vector<int> t_max;
  std::vector<std::int64_t> horizon;
  for (int n : c.sizes) {
    instances.push_back(build_instance(src, n));
    t_max.push_back(resolved_t_max(c, instances.back()));
    horizon.push_back(resolved_horizon(c, t_max.back()));
    zeta.push_back(attacker_zeta(instances.back(), Visibility::full, horizon.back(), t_max.back()));
  }
  run_jobs(total, workers, [&](std::size_t k) {
    const std::size_t si = k / per_size;
    const auto& job = jobs[k % per_size];
    const auto& g = instances[si];
    const auto t0 = std::chrono::steady_clock::now();
    std::ostringstream row;
    row << c.sizes[si] << ',' << job.spec.kind << ',' << format_real(job.spec.alpha) << ',';
    try {
      const auto factory = make_generator_factory(g, job.spec, c.max_states);
      const auto cells = evaluate_cells(factory, g, c, job.grid, job.alpha, horizon[si],
                                        t_max[si], {Visibility::full}, {0.0}, {zeta[si]});
      const auto& cell = cells.front();
      row << format_real(cell.value) << ','
          << (cell.normalized ? format_real(*cell.normalized) : "") << ','
          << format_real(cell.stderr) << ',' << (cell.normalized ? "ok" : "zeta_nonpositive");
    } catch (const Error& e) {
      resource[k] = dynamic_cast<const ResourceError*>(&e) != nullptr;
      row << ",,," << status_of(e);
    }
    rows[k] = row.str();
    timing[k] = std::to_string(c.sizes[si]) + ',' + job.spec.kind + ',' +
                format_real(job.spec.alpha) + ',' + format_real(seconds_since(t0));
  });
  SweepOutput out;
  out.csv = "n,generator,alpha,value,normalized,stderr,status\n";
  out.timing_csv = "n,generator,alpha,seconds\n";
  for (std::size_t k = 0; k < total; ++k) {
    out.csv += rows[k] + '\n';
    out.timing_csv += timing[k] + '\n';
    out.resource_error = out.resource_error || resource[k];
  }
  write_or_keep(c.output, out.csv);
  write_or_keep(c.timing_output, out.timing_csv);
  return out;
}

}  // namespace psg
