#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "psg/instance.hpp"
#include "psg/markov.hpp"
#include "psg/tours.hpp"

namespace psg {

struct InstanceSource {
  enum class Kind { random, csv, file };
  Kind kind = Kind::random;
  int n = 10;
  double side = 20.0;
  std::uint64_t seed = 1;
  UtilitySpec utility;
  std::string path;
  double penalty = 0.0;
};

struct GeneratorGrid {
  std::string kind;
  std::vector<double> alphas;
  std::optional<double> cap;
  GroupOrder group_order = GroupOrder::tree;
};

struct ExperimentConfig {
  InstanceSource instance;
  std::vector<GeneratorGrid> generators;
  std::vector<Visibility> models{Visibility::full, Visibility::local, Visibility::none};
  std::vector<double> penalties{0.0};
  /// 0 selects 20 x t_max.
  std::int64_t horizon = 0;
  /// 0 selects 4 x diameter.
  int t_max = 0;
  int traces = 20;
  int replications = 10;
  std::uint64_t seed = 1;
  std::vector<int> sizes;
  int emr_samples = 20;
  int entropy_steps = 2000;
  int entropy_samples = 4;
  std::size_t max_states = 2500;
  std::string output;
  std::string timing_output;
  std::string best_output;
};

/// Throws ValidationError naming the offending field.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
void validate_config(const ExperimentConfig& c);

/// Builds the configured instance; n_override replaces n for random sources.
GraphInstance build_instance(const InstanceSource& src, int n_override = -1);

/// PSG_WORKERS when set to a positive integer, else the hardware thread count.
int worker_count();

struct SweepOutput {
  std::string csv;
  std::string timing_csv;
  std::string best_csv;
  bool resource_error = false;
};

/// EMR (relative to BGT) and entropy rate per generator and alpha.
SweepOutput run_frontier(const ExperimentConfig& c, int workers);
/// Best-response payoff per generator, alpha, model and penalty, normalized by
/// the BGT payoff at M = 0 under the same model.
/// Replication r of (generator g, alpha a) samples its traces with seed
/// derive_seed(master, {g, a, r}); every model and penalty reuses them.
SweepOutput run_payoff(const ExperimentConfig& c, int workers);
/// Full-visibility payoff at M = 0 with constant utilities for each size.
SweepOutput run_scale(const ExperimentConfig& c, int workers);

}  // namespace psg
