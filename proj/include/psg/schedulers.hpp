#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "psg/instance.hpp"
#include "psg/rng.hpp"
#include "psg/schedule.hpp"
#include "psg/tours.hpp"

namespace psg {

// ---- TSP-b ----

/// gamma[k] is the probability that the next kept element of an n-cycle lies
/// k positions ahead of the current one, with gamma[0] the full-loop return
/// (n positions ahead). Throws DomainError unless 0 < alpha <= 1.
std::vector<double> tspb_next_distribution(double alpha, int n);

/// sum_{k>=1} (1 - (1 - (1-alpha)^(k-1))^n), to absolute error 1e-12.
double expected_rounds_beta(double alpha, int n);

/// Follows a base stream and keeps each upcoming element with probability
/// alpha, travelling directly between kept elements. A kept element equal to
/// the current site is a one-slot dwell.
class TspbGenerator : public ScheduleGenerator {
 public:
  TspbGenerator(IntMatrix travel, std::unique_ptr<SiteStream> base, double alpha,
                std::uint64_t seed);
  std::optional<std::vector<double>> next_distribution() override;
  bool deterministic() const override { return alpha_ >= 1.0; }

 protected:
  int next_site() override;

 private:
  int base_at(std::size_t k);

  std::unique_ptr<SiteStream> base_;
  std::deque<int> ahead_;
  double alpha_;
  std::size_t lookahead_;
  Rng rng_;
};

/// Base stream is the cyclic TSP tour when utilities are uniform, else the
/// BGT stream.
std::unique_ptr<ScheduleGenerator> tspb_generator(const GraphInstance& g, double alpha,
                                                  std::uint64_t seed);
std::unique_ptr<ScheduleGenerator> tspb_generator(const IntMatrix& travel,
                                                  const Tour& tour, double alpha,
                                                  std::uint64_t seed);

// ---- Bwalk ----

/// P'(i,j) proportional to alpha^-w(i,j) over j != i. Throws DomainError
/// for alpha < 1.
RealMatrix bwalk_transition(const IntMatrix& travel, double alpha);

/// Symmetric edge weights alpha^-(w - w_min), w_min the smallest off-diagonal
/// travel time. Common scaling leaves every tree law unchanged.
RealMatrix bwalk_edge_weights(const IntMatrix& travel, double alpha);

struct SpanningTree {
  int root = 0;
  /// parent[v], -1 for the root and for sites outside the tree.
  std::vector<int> parent;
  /// Children in order of first discovery.
  std::vector<std::vector<int>> children;
  /// Depth-first preorder from the root.
  std::vector<int> preorder;
};

/// First-entrance tree of the walk driven by `p` restricted to `sites`, started
/// at `root`. Throws ResourceError after `max_steps` walk steps.
SpanningTree bwalk_random_spanning_tree(const RealMatrix& p, const std::vector<int>& sites,
                                        int root, Rng& rng,
                                        std::int64_t max_steps = 100'000'000);
SpanningTree bwalk_random_spanning_tree(const RealMatrix& p, int root, Rng& rng);

/// Entropy (nats) of the spanning-tree law proportional to the product of
/// edge weights over the complete graph on `sites`.
double spanning_tree_entropy(const RealMatrix& weights, const std::vector<int>& sites);

/// Log of the weighted spanning-tree count (matrix-tree theorem).
double log_weighted_tree_count(const RealMatrix& weights, const std::vector<int>& sites);

/// Seed-independent Bwalk data: P', edge weights, the group plan and each
/// group's tree entropy.
struct BwalkModel {
  RealMatrix p;
  RealMatrix weights;
  BgtPlan plan;
  std::vector<double> tree_entropy;
};

std::shared_ptr<const BwalkModel> bwalk_model(const GraphInstance& g, double alpha);

/// Grouped stream whose in-group rounds are preorders of fresh random
/// spanning trees. A round's root is drawn from the P' row of the current
/// site restricted to the group (excluding the current site when possible).
class BwalkStream : public GroupedStream {
 public:
  BwalkStream(std::shared_ptr<const BwalkModel> model, const IntMatrix& travel,
              std::uint64_t seed);

 protected:
  Round begin_round(const BgtGroup& group, int current, Rng& rng) override;

 private:
  std::shared_ptr<const BwalkModel> model_;
};

/// Generator over a grouped stream that exposes the stream's step entropy.
class GroupedGenerator : public ScheduleGenerator {
 public:
  GroupedGenerator(IntMatrix travel, std::unique_ptr<GroupedStream> stream,
                   bool deterministic);
  std::optional<std::vector<double>> next_distribution() override;
  double step_entropy() override;
  bool deterministic() const override { return deterministic_; }

 protected:
  int next_site() override;

 private:
  const StreamStep& peek();

  std::unique_ptr<GroupedStream> stream_;
  std::optional<StreamStep> peeked_;
  bool deterministic_;
};

std::unique_ptr<ScheduleGenerator> bwalk_generator(const GraphInstance& g,
                                                   std::shared_ptr<const BwalkModel> model,
                                                   std::uint64_t seed);
std::unique_ptr<ScheduleGenerator> bwalk_generator(const GraphInstance& g, double alpha,
                                                   std::uint64_t seed);

// ---- SG ----

struct StateNode {
  /// Slots since the patroller last departed each site.
  std::vector<int> elapsed;
  int position = 0;

  bool operator==(const StateNode&) const = default;
  auto operator<=>(const StateNode&) const = default;
};

struct StateArc {
  int to = 0;
  double weight = 0.0;
};

struct StateGraph {
  std::vector<StateNode> nodes;
  std::vector<std::vector<StateArc>> arcs;
  double cap = 0.0;
};

inline constexpr std::size_t kDefaultMaxStates = 2500;

/// Successor of `x` after moving to `site`, with the arc weight: the largest
/// cumulative utility any site has accrued just before the arrival. Sites with
/// zero utility keep their clock at 0.
std::pair<StateNode, double> sg_move(const GraphInstance& g, const StateNode& x, int site);

/// Utility component cumulative_utility(h_i, elapsed_i).
double sg_component(const GraphInstance& g, const StateNode& x, int i);

/// Breadth-first closure from (all zero, position 0), dropping states with a
/// component above `cap` and arcs heavier than `cap`.
StateGraph sg_build(const GraphInstance& g, double cap,
                    std::size_t max_states = kDefaultMaxStates);

/// 1.5 x EMR of the BGT schedule.
double sg_default_cap(const GraphInstance& g);

struct SgCycle {
  std::vector<int> period;
  double bottleneck = 0.0;
  std::vector<int> states;
};

/// Minimum-bottleneck cycle. Throws NoFeasibleSchedule if the pruned graph is
/// acyclic.
SgCycle sg_optimal_deterministic(const StateGraph& sg);

/// Walk on the (lazily expanded) state graph with weights
/// 1 / (max component of the successor)^alpha, 1 when that maximum is 0.
/// Successors over the cap are avoided unless every successor is.
class SgRandomGenerator : public ScheduleGenerator {
 public:
  SgRandomGenerator(const GraphInstance& g, double cap, double alpha, std::uint64_t seed);
  std::optional<std::vector<double>> next_distribution() override;

 protected:
  int next_site() override;

 private:
  const std::vector<double>& weights();

  GraphInstance g_;
  std::vector<CumulativeTable> tables_;
  double cap_;
  double alpha_;
  StateNode state_;
  std::optional<std::vector<double>> weights_;
  Rng rng_;
};

// ---- Factory ----

struct GeneratorSpec {
  std::string kind;  ///< bgt, tspb, bwalk, sg_det, sg_rand
  double alpha = 1.0;
  std::uint64_t seed = 0;
  std::optional<double> cap;
  GroupOrder group_order = GroupOrder::tree;
};

/// Validates kind and alpha domain; the message names the valid domain.
void validate_generator_spec(const GeneratorSpec& spec);
std::string alpha_domain(const std::string& kind);

/// Factory with all seed-independent preprocessing (plans, state graphs)
/// done once.
GeneratorFactory make_generator_factory(const GraphInstance& g, const GeneratorSpec& spec,
                                        std::size_t max_states = kDefaultMaxStates);

nlohmann::json to_json(const GeneratorSpec& s);
GeneratorSpec generator_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SgCycle& c);

}  // namespace psg
