#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "psg/instance.hpp"
#include "psg/rng.hpp"
#include "psg/schedule.hpp"

namespace psg {

struct Tour {
  std::vector<int> order;
  /// Closed-tour travel time including the edge back to order.front().
  std::int64_t length = 0;
};

std::int64_t tour_length(const IntMatrix& travel, const std::vector<int>& order);

/// Greedy tour over `sites`, starting at sites.front().
Tour nearest_neighbor_tour(const IntMatrix& travel, const std::vector<int>& sites);

/// First-improvement 2-opt to a local optimum; positions are scanned in
/// increasing (i, j) order and the scan restarts after each exchange.
Tour two_opt(const IntMatrix& travel, Tour tour);

/// No single segment reversal shortens the tour.
bool is_two_opt_optimal(const IntMatrix& travel, const Tour& tour);

/// Nearest neighbour from sites.front() followed by 2-opt.
Tour tsp_tour(const IntMatrix& travel, const std::vector<int>& sites);
Tour tsp_tour(const GraphInstance& g);

enum class GroupOrder { tree, roundrobin };

std::string to_string(GroupOrder o);
GroupOrder group_order_from_string(const std::string& s);

struct BgtGroup {
  int index = 0;
  std::vector<int> sites;
  Tour tour;
};

struct BgtPlan {
  /// Normalized top-degree coefficients l_j.
  std::vector<double> weights;
  /// V_0..V_s, possibly empty. V_0 sites are not part of the group order.
  std::vector<BgtGroup> groups;
  /// One period of group indices.
  std::vector<int> visit_order;
  int diameter = 0;
  GroupOrder order = GroupOrder::tree;
};

/// s = ceil(2 log2 n).
int bgt_group_count(int n);

/// 0 when w <= n^-2, else the i >= 1 with 2^(i-1) n^-2 < w <= 2^i n^-2.
int bgt_group_index(double w, int n);

/// Level (0 = root) of each position in the inorder traversal of a complete
/// binary tree with k levels; 2^k - 1 entries.
std::vector<int> inorder_levels(int k);

BgtPlan bgt_plan(const GraphInstance& g, GroupOrder order = GroupOrder::tree);

/// Visits per period of each group in plan.visit_order.
std::vector<int> group_frequencies(const BgtPlan& plan);

/// One emitted site of a grouped stream. `entropy` and `distribution` are set
/// only when the site opens a fresh in-group round with a random choice.
struct StreamStep {
  int site = 0;
  double entropy = 0.0;
  std::optional<std::vector<double>> distribution;
};

/// Walks the group order: each group turn emits a segment of the group's
/// current round (travel within the segment at most the diameter, at most
/// |V_i| sites, never past the round end), then one V_0 site taken from a
/// seeded permutation that is redrawn when exhausted.
class GroupedStream : public SiteStream {
 public:
  GroupedStream(const BgtPlan& plan, IntMatrix travel, std::uint64_t seed);

  StreamStep next_step();
  int next_site() override { return next_step().site; }

 protected:
  struct Round {
    std::vector<int> order;
    double entropy = 0.0;
    std::optional<std::vector<double>> distribution;
  };
  /// Site order for a fresh round of `group`; `current` is the last emitted
  /// site (-1 before the first).
  virtual Round begin_round(const BgtGroup& group, int current, Rng& rng);

  const IntMatrix& travel() const { return travel_; }

 private:
  void fill_turn();

  std::vector<BgtGroup> groups_;
  std::vector<int> visit_order_;
  std::vector<int> light_;
  int diameter_;
  IntMatrix travel_;
  Rng rng_;
  std::vector<Round> rounds_;
  std::vector<std::size_t> cursor_;
  std::size_t slot_ = 0;
  std::vector<int> permutation_;
  std::size_t permutation_pos_ = 0;
  std::vector<StreamStep> pending_;
  std::size_t pending_pos_ = 0;
  int last_ = -1;
};

std::unique_ptr<ScheduleGenerator> bgt_generator(const GraphInstance& g,
                                                 const BgtPlan& plan,
                                                 std::uint64_t seed = 0);

nlohmann::json to_json(const Tour& t);
nlohmann::json to_json(const BgtPlan& p);

}  // namespace psg
