#include "psg/tours.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "psg/decimal.hpp"
#include "psg/error.hpp"

namespace psg {

std::int64_t tour_length(const IntMatrix& travel, const std::vector<int>& order) {
  std::int64_t len = 0;
  for (std::size_t k = 0; k + 1 < order.size(); ++k) len += travel(order[k], order[k + 1]);
  if (order.size() > 1) len += travel(order.back(), order.front());
  return len;
}

Tour nearest_neighbor_tour(const IntMatrix& travel, const std::vector<int>& sites) {
  Tour t;
  if (sites.empty()) return t;
  std::vector<int> left(sites.begin() + 1, sites.end());
  t.order.push_back(sites.front());
  while (!left.empty()) {
    const int cur = t.order.back();
    std::size_t best = 0;
    for (std::size_t k = 1; k < left.size(); ++k)
      if (travel(cur, left[k]) < travel(cur, left[best])) best = k;
    t.order.push_back(left[best]);
    left.erase(left.begin() + static_cast<std::ptrdiff_t>(best));
  }
  t.length = tour_length(travel, t.order);
  return t;
}

namespace {

// Gain of reversing order[i+1..j]; negative means shorter.
std::int64_t reversal_delta(const IntMatrix& travel, const std::vector<int>& o,
                            std::size_t i, std::size_t j) {
  const std::size_t m = o.size();
  const int a = o[i], b = o[i + 1], c = o[j], e = o[(j + 1) % m];
  return std::int64_t{travel(a, c)} + travel(b, e) - travel(a, b) - travel(c, e);
}

}  // namespace

Tour two_opt(const IntMatrix& travel, Tour tour) {
  auto& o = tour.order;
  const std::size_t m = o.size();
  if (m < 4) {
    tour.length = tour_length(travel, o);
    return tour;
  }
  bool improved = true;
  while (improved) {
    improved = false;
    for (std::size_t i = 0; i + 2 < m && !improved; ++i) {
      for (std::size_t j = i + 2; j < m; ++j) {
        if (i == 0 && j == m - 1) continue;
        if (reversal_delta(travel, o, i, j) < 0) {
          std::reverse(o.begin() + static_cast<std::ptrdiff_t>(i + 1),
                       o.begin() + static_cast<std::ptrdiff_t>(j + 1));
          improved = true;
          break;
        }
      }
    }
  }
  tour.length = tour_length(travel, o);
  return tour;
}

bool is_two_opt_optimal(const IntMatrix& travel, const Tour& tour) {
  const std::size_t m = tour.order.size();
  for (std::size_t i = 0; i + 2 < m; ++i)
    for (std::size_t j = i + 2; j < m; ++j) {
      if (i == 0 && j == m - 1) continue;
      if (reversal_delta(travel, tour.order, i, j) < 0) return false;
    }
  return true;
}

Tour tsp_tour(const IntMatrix& travel, const std::vector<int>& sites) {
  return two_opt(travel, nearest_neighbor_tour(travel, sites));
}

Tour tsp_tour(const GraphInstance& g) {
  std::vector<int> sites(g.size());
  for (int i = 0; i < g.size(); ++i) sites[i] = i;
  return tsp_tour(g.travel(), sites);
}

std::string to_string(GroupOrder o) {
  return o == GroupOrder::tree ? "tree" : "roundrobin";
}

GroupOrder group_order_from_string(const std::string& s) {
  if (s == "tree") return GroupOrder::tree;
  if (s == "roundrobin") return GroupOrder::roundrobin;
  throw ValidationError("unknown group order '" + s + "' (expected tree or roundrobin)");
}

int bgt_group_count(int n) {
  int s = 0;
  while (std::ldexp(1.0, s) < static_cast<double>(n) * n) ++s;
  return s;
}

int bgt_group_index(double w, int n) {
  const double unit = 1.0 / (static_cast<double>(n) * n);
  if (w <= unit) return 0;
  int i = 1;
  while (w > std::ldexp(unit, i)) ++i;
  return i;
}

std::vector<int> inorder_levels(int k) {
  std::vector<int> levels;
  if (k <= 0) return levels;
  const std::size_t len = (std::size_t{1} << k) - 1;
  for (std::size_t p = 1; p <= len; ++p) {
    int tz = 0;
    while (((p >> tz) & 1U) == 0) ++tz;
    levels.push_back(k - 1 - tz);
  }
  return levels;
}

BgtPlan bgt_plan(const GraphInstance& g, GroupOrder order) {
  const int n = g.size();
  BgtPlan plan;
  plan.order = order;
  plan.diameter = g.diameter();
  const int d = g.max_degree();
  const bool uniform = g.uniform_utilities();
  plan.weights.resize(n);
  double total = 0.0;
  for (int j = 0; j < n; ++j)
    total += plan.weights[j] = uniform ? 1.0 : g.utility(j).coefficient(d);
  if (!(total > 0.0)) throw ValidationError("all site weights are zero");
  for (auto& w : plan.weights) w /= total;

  const int s = std::max(1, bgt_group_count(n));
  plan.groups.resize(s + 1);
  for (int i = 0; i <= s; ++i) plan.groups[i].index = i;
  for (int j = 0; j < n; ++j) {
    const int gi = uniform ? std::max(1, bgt_group_index(1.0 / n, n))
                           : bgt_group_index(plan.weights[j], n);
    plan.groups[gi].sites.push_back(j);
  }
  for (auto& grp : plan.groups)
    if (!grp.sites.empty()) grp.tour = tsp_tour(g.travel(), grp.sites);

  std::vector<int> ranked;  // nonempty V_1..V_s, heaviest first
  for (int i = s; i >= 1; --i)
    if (!plan.groups[i].sites.empty()) ranked.push_back(i);
  if (order == GroupOrder::roundrobin) {
    plan.visit_order = ranked;
  } else {
    const int k = static_cast<int>(ranked.size());
    for (int level : inorder_levels(k)) plan.visit_order.push_back(ranked[k - 1 - level]);
  }
  return plan;
}

std::vector<int> group_frequencies(const BgtPlan& plan) {
  std::vector<int> f(plan.groups.size(), 0);
  for (int gi : plan.visit_order) ++f[gi];
  return f;
}

GroupedStream::GroupedStream(const BgtPlan& plan, IntMatrix travel, std::uint64_t seed)
    : groups_(plan.groups),
      visit_order_(plan.visit_order),
      light_(plan.groups.empty() ? std::vector<int>{} : plan.groups[0].sites),
      diameter_(plan.diameter),
      travel_(std::move(travel)),
      rng_(seed),
      rounds_(plan.groups.size()),
      cursor_(plan.groups.size(), 0) {
  if (visit_order_.empty()) throw ValidationError("plan has no group to visit");
}

GroupedStream::Round GroupedStream::begin_round(const BgtGroup& group, int, Rng&) {
  return {group.tour.order, 0.0, std::nullopt};
}

void GroupedStream::fill_turn() {
  pending_.clear();
  pending_pos_ = 0;
  const int gi = visit_order_[slot_];
  slot_ = (slot_ + 1) % visit_order_.size();
  const auto& group = groups_[gi];
  auto& round = rounds_[gi];
  auto& pos = cursor_[gi];
  int current = last_;
  if (pos >= round.order.size()) {
    round = begin_round(group, current, rng_);
    pos = 0;
  }
  std::int64_t used = 0;
  std::size_t count = 0;
  while (pos < round.order.size() && count < group.sites.size()) {
    const int site = round.order[pos];
    if (count > 0) {
      const int hop = current == site ? 1 : travel_(current, site);
      if (used + hop > diameter_) break;
      used += hop;
    }
    StreamStep step{site, 0.0, std::nullopt};
    if (pos == 0) {
      step.entropy = round.entropy;
      step.distribution = round.distribution;
    }
    pending_.push_back(std::move(step));
    current = site;
    ++pos;
    ++count;
  }
  if (!light_.empty()) {
    if (permutation_pos_ >= permutation_.size()) {
      permutation_ = light_;
      std::shuffle(permutation_.begin(), permutation_.end(), rng_);
      permutation_pos_ = 0;
    }
    pending_.push_back({permutation_[permutation_pos_++], 0.0, std::nullopt});
  }
}

StreamStep GroupedStream::next_step() {
  if (pending_pos_ >= pending_.size()) fill_turn();
  StreamStep step = std::move(pending_[pending_pos_++]);
  last_ = step.site;
  return step;
}

std::unique_ptr<ScheduleGenerator> bgt_generator(const GraphInstance& g,
                                                 const BgtPlan& plan,
                                                 std::uint64_t seed) {
  return std::make_unique<StreamGenerator>(
      g.travel(), std::make_unique<GroupedStream>(plan, g.travel(), seed));
}

nlohmann::json to_json(const Tour& t) {
  return {{"order", t.order}, {"length", t.length}};
}

nlohmann::json to_json(const BgtPlan& p) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& grp : p.groups)
    groups.push_back({{"index", grp.index}, {"sites", grp.sites}, {"tour", to_json(grp.tour)}});
  nlohmann::json weights = nlohmann::json::array();
  for (double w : p.weights) weights.push_back(format_real(w));
  return {{"groups", groups},
          {"visit_order", p.visit_order},
          {"weights", weights},
          {"diameter", p.diameter},
          {"group_order", to_string(p.order)}};
}

}  // namespace psg
