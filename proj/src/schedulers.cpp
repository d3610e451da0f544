#include "psg/schedulers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "psg/decimal.hpp"
#include "psg/error.hpp"
#include "psg/kernels.hpp"

namespace psg {

namespace {

void require_tspb_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw DomainError("TSP-b alpha must lie in (0, 1], got " + format_real(alpha));
}

// (1 - alpha)^k without cancellation for small alpha.
double skip_power(double alpha, double k) {
  if (alpha >= 1.0) return k == 0.0 ? 1.0 : 0.0;
  return std::exp(k * std::log1p(-alpha));
}

std::vector<double> point_mass(int n, int site) {
  std::vector<double> d(n, 0.0);
  d[site] = 1.0;
  return d;
}

}  // namespace

std::vector<double> tspb_next_distribution(double alpha, int n) {
  require_tspb_alpha(alpha);
  if (n < 1) throw DomainError("tour must contain at least one site");
  const double loop = alpha >= 1.0 ? 1.0 : -std::expm1(n * std::log1p(-alpha));
  std::vector<double> gamma(n);
  for (int k = 1; k < n; ++k) gamma[k] = alpha * skip_power(alpha, k - 1) / loop;
  gamma[0] = alpha * skip_power(alpha, n - 1) / loop;
  return gamma;
}

double expected_rounds_beta(double alpha, int n) {
  require_tspb_alpha(alpha);
  if (n < 1) throw DomainError("n must be >= 1");
  double sum = 0.0;
  for (std::int64_t k = 1;; ++k) {
    const double q = skip_power(alpha, static_cast<double>(k - 1));
    sum += q >= 1.0 ? 1.0 : -std::expm1(n * std::log1p(-q));
    const double tail = n * skip_power(alpha, static_cast<double>(k)) / alpha;
    if (tail <= 1e-13) break;
  }
  return sum;
}

TspbGenerator::TspbGenerator(IntMatrix travel, std::unique_ptr<SiteStream> base,
                             double alpha, std::uint64_t seed)
    : ScheduleGenerator(std::move(travel)), base_(std::move(base)), alpha_(alpha), rng_(seed) {
  require_tspb_alpha(alpha);
  lookahead_ = 1;
  if (alpha < 1.0) {
    const double k = std::ceil(std::log(1e-15) / std::log1p(-alpha));
    lookahead_ = static_cast<std::size_t>(std::clamp(k, 1.0, 1e6));
  }
}

int TspbGenerator::base_at(std::size_t k) {
  while (ahead_.size() <= k) ahead_.push_back(base_->next_site());
  return ahead_[k];
}

std::optional<std::vector<double>> TspbGenerator::next_distribution() {
  if (current_site() < 0) return point_mass(size(), base_at(0));
  std::vector<double> d(size(), 0.0);
  double total = 0.0, keep = alpha_;
  for (std::size_t k = 0; k < lookahead_; ++k) {
    d[base_at(k)] += keep;
    total += keep;
    keep *= 1.0 - alpha_;
  }
  for (auto& v : d) v /= total;
  return d;
}

int TspbGenerator::next_site() {
  std::size_t skip = 0;
  if (current_site() >= 0)
    while (uniform01(rng_) >= alpha_) ++skip;
  base_at(skip);
  ahead_.erase(ahead_.begin(), ahead_.begin() + static_cast<std::ptrdiff_t>(skip));
  const int s = ahead_.front();
  ahead_.pop_front();
  return s;
}

std::unique_ptr<ScheduleGenerator> tspb_generator(const IntMatrix& travel, const Tour& tour,
                                                  double alpha, std::uint64_t seed) {
  return std::make_unique<TspbGenerator>(travel, std::make_unique<CyclicStream>(tour.order),
                                         alpha, seed);
}

std::unique_ptr<ScheduleGenerator> tspb_generator(const GraphInstance& g, double alpha,
                                                  std::uint64_t seed) {
  if (g.uniform_utilities()) return tspb_generator(g.travel(), tsp_tour(g), alpha, seed);
  return std::make_unique<TspbGenerator>(
      g.travel(), std::make_unique<GroupedStream>(bgt_plan(g), g.travel(), 0), alpha, seed);
}

// ---- Bwalk ----

RealMatrix bwalk_edge_weights(const IntMatrix& travel, double alpha) {
  if (!(alpha >= 1.0) || !std::isfinite(alpha))
    throw DomainError("Bwalk alpha must be >= 1, got " + format_real(alpha));
  const std::size_t n = travel.rows();
  int w_min = std::numeric_limits<int>::max();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) w_min = std::min(w_min, travel(i, j));
  RealMatrix w(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) w(i, j) = std::pow(alpha, -static_cast<double>(travel(i, j) - w_min));
  return w;
}

RealMatrix bwalk_transition(const IntMatrix& travel, double alpha) {
  RealMatrix p = bwalk_edge_weights(travel, alpha);
  const std::size_t n = p.rows();
  if (n == 1) p(0, 0) = 1.0;
  for (std::size_t i = 0; i < n && n > 1; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += p(i, j);
    for (std::size_t j = 0; j < n; ++j) p(i, j) /= row;
  }
  return p;
}

SpanningTree bwalk_random_spanning_tree(const RealMatrix& p, const std::vector<int>& sites,
                                        int root, Rng& rng, std::int64_t max_steps) {
  const int n = static_cast<int>(p.rows());
  const std::size_t m = sites.size();
  if (std::find(sites.begin(), sites.end(), root) == sites.end())
    throw ValidationError("spanning-tree root is not among the sites");
  SpanningTree t;
  t.root = root;
  t.parent.assign(n, -1);
  t.children.assign(n, {});
  std::vector<char> seen(n, 0);
  seen[root] = 1;
  std::size_t hit = 1;
  int cur = root;
  std::vector<double> row(m);
  std::int64_t steps = 0;
  while (hit < m) {
    for (std::size_t k = 0; k < m; ++k) row[k] = sites[k] == cur ? 0.0 : p(cur, sites[k]);
    const int next = sites[sample_index(row, rng)];
    if (!seen[next]) {
      seen[next] = 1;
      t.parent[next] = cur;
      t.children[cur].push_back(next);
      ++hit;
    }
    cur = next;
    if (++steps > max_steps)
      throw ResourceError("spanning-tree walk exceeded " + std::to_string(max_steps) + " steps");
  }
  std::vector<int> stack{root};
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    t.preorder.push_back(v);
    for (auto it = t.children[v].rbegin(); it != t.children[v].rend(); ++it) stack.push_back(*it);
  }
  return t;
}

SpanningTree bwalk_random_spanning_tree(const RealMatrix& p, int root, Rng& rng) {
  std::vector<int> sites(p.rows());
  for (std::size_t i = 0; i < sites.size(); ++i) sites[i] = static_cast<int>(i);
  return bwalk_random_spanning_tree(p, sites, root, rng);
}

namespace {

// Reduced Laplacian (last site grounded).
Eigen::MatrixXd reduced_laplacian(const RealMatrix& w, const std::vector<int>& sites) {
  const int m = static_cast<int>(sites.size());
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(m - 1, m - 1);
  for (int a = 0; a < m - 1; ++a)
    for (int b = 0; b < m; ++b) {
      if (a == b) continue;
      const double v = w(sites[a], sites[b]);
      l(a, a) += v;
      if (b < m - 1) l(a, b) -= v;
    }
  return l;
}

}  // namespace

double log_weighted_tree_count(const RealMatrix& weights, const std::vector<int>& sites) {
  if (sites.size() <= 1) return 0.0;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(reduced_laplacian(weights, sites));
  double logdet = 0.0;
  for (Eigen::Index k = 0; k < lu.matrixLU().rows(); ++k)
    logdet += std::log(std::abs(lu.matrixLU()(k, k)));
  return logdet;
}

double spanning_tree_entropy(const RealMatrix& weights, const std::vector<int>& sites) {
  const int m = static_cast<int>(sites.size());
  if (m <= 2) return 0.0;
  const Eigen::MatrixXd l = reduced_laplacian(weights, sites);
  const Eigen::MatrixXd g = l.partialPivLu().inverse();
  const auto green = [&](int a, int b) { return a == m - 1 || b == m - 1 ? 0.0 : g(a, b); };
  double h = log_weighted_tree_count(weights, sites);
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b) {
      const double w = weights(sites[a], sites[b]);
      if (w <= 0.0) continue;
      const double r = green(a, a) + green(b, b) - 2.0 * green(a, b);
      h -= w * r * std::log(w);
    }
  return h;
}

std::shared_ptr<const BwalkModel> bwalk_model(const GraphInstance& g, double alpha) {
  auto m = std::make_shared<BwalkModel>();
  m->weights = bwalk_edge_weights(g.travel(), alpha);
  m->p = bwalk_transition(g.travel(), alpha);
  m->plan = bgt_plan(g);
  for (const auto& grp : m->plan.groups)
    m->tree_entropy.push_back(spanning_tree_entropy(m->weights, grp.sites));
  return m;
}

BwalkStream::BwalkStream(std::shared_ptr<const BwalkModel> model, const IntMatrix& travel,
                         std::uint64_t seed)
    : GroupedStream(model->plan, travel, seed), model_(std::move(model)) {}

GroupedStream::Round BwalkStream::begin_round(const BgtGroup& group, int current, Rng& rng) {
  const int n = static_cast<int>(model_->p.rows());
  std::vector<double> dist(n, 0.0);
  double total = 0.0;
  for (int s : group.sites) {
    if (s == current) continue;
    dist[s] = current < 0 ? (s == group.sites.front() ? 1.0 : 0.0) : model_->p(current, s);
    total += dist[s];
  }
  if (total <= 0.0) {
    dist[group.sites.front() == current ? current : group.sites.front()] = 1.0;
    total = 1.0;
  }
  for (auto& v : dist) v /= total;
  const int root = static_cast<int>(sample_index(dist, rng));
  auto tree = bwalk_random_spanning_tree(model_->p, group.sites, root, rng);
  Round r;
  r.order = std::move(tree.preorder);
  r.entropy = shannon_entropy(dist) + model_->tree_entropy[group.index];
  r.distribution = std::move(dist);
  return r;
}

GroupedGenerator::GroupedGenerator(IntMatrix travel, std::unique_ptr<GroupedStream> stream,
                                   bool deterministic)
    : ScheduleGenerator(std::move(travel)),
      stream_(std::move(stream)),
      deterministic_(deterministic) {}

const StreamStep& GroupedGenerator::peek() {
  if (!peeked_) peeked_ = stream_->next_step();
  return *peeked_;
}

std::optional<std::vector<double>> GroupedGenerator::next_distribution() {
  const auto& s = peek();
  if (s.distribution) return s.distribution;
  return point_mass(size(), s.site);
}

double GroupedGenerator::step_entropy() { return peek().entropy; }

int GroupedGenerator::next_site() {
  const int s = peek().site;
  peeked_.reset();
  return s;
}

std::unique_ptr<ScheduleGenerator> bwalk_generator(const GraphInstance& g,
                                                   std::shared_ptr<const BwalkModel> model,
                                                   std::uint64_t seed) {
  return std::make_unique<GroupedGenerator>(
      g.travel(), std::make_unique<BwalkStream>(std::move(model), g.travel(), seed),
      g.size() <= 2);
}

std::unique_ptr<ScheduleGenerator> bwalk_generator(const GraphInstance& g, double alpha,
                                                   std::uint64_t seed) {
  return bwalk_generator(g, bwalk_model(g, alpha), seed);
}

// ---- SG ----

namespace {

struct Components {
  const GraphInstance& g;
  std::vector<CumulativeTable>* tables;

  double operator()(int i, std::int64_t elapsed) const {
    if (tables) return (*tables)[i](elapsed);
    return cumulative_utility(g.utility(i), elapsed);
  }
};

std::pair<StateNode, double> move_state(const GraphInstance& g, const StateNode& x, int site,
                                        const Components& u) {
  const int n = g.size();
  const int d = g.transit(x.position, site);
  StateNode y;
  y.position = site;
  y.elapsed.resize(n);
  double w = 0.0;
  for (int i = 0; i < n; ++i) {
    const bool idle = g.utility(i).is_zero();
    if (i == site) {
      y.elapsed[i] = 0;
      if (!idle) w = std::max(w, u(i, x.elapsed[i] + d));
    } else {
      y.elapsed[i] = idle ? 0 : x.elapsed[i] + d;
      if (!idle) w = std::max(w, u(i, y.elapsed[i]));
    }
  }
  return {std::move(y), w};
}

double max_component(const GraphInstance& g, const StateNode& x, const Components& u) {
  double m = 0.0;
  for (int i = 0; i < g.size(); ++i) m = std::max(m, u(i, x.elapsed[i]));
  return m;
}

std::vector<int> successor_sites(int n, int position) {
  std::vector<int> s;
  for (int y = 0; y < n; ++y)
    if (y != position || n == 1) s.push_back(y);
  return s;
}

}  // namespace

std::pair<StateNode, double> sg_move(const GraphInstance& g, const StateNode& x, int site) {
  return move_state(g, x, site, Components{g, nullptr});
}

double sg_component(const GraphInstance& g, const StateNode& x, int i) {
  return cumulative_utility(g.utility(i), x.elapsed[i]);
}

StateGraph sg_build(const GraphInstance& g, double cap, std::size_t max_states) {
  if (!(cap > 0.0)) throw DomainError("state-graph cap must be positive");
  const int n = g.size();
  std::vector<CumulativeTable> tables;
  for (const auto& h : g.utilities()) tables.emplace_back(h);
  const Components u{g, &tables};

  StateGraph sg;
  sg.cap = cap;
  std::map<StateNode, int> index;
  StateNode start;
  start.elapsed.assign(n, 0);
  index.emplace(start, 0);
  sg.nodes.push_back(start);
  sg.arcs.emplace_back();
  for (std::size_t k = 0; k < sg.nodes.size(); ++k) {
    const StateNode x = sg.nodes[k];
    for (int site : successor_sites(n, x.position)) {
      auto [y, w] = move_state(g, x, site, u);
      if (w > cap || max_component(g, y, u) > cap) continue;
      auto [it, fresh] = index.emplace(y, static_cast<int>(sg.nodes.size()));
      if (fresh) {
        if (sg.nodes.size() >= max_states)
          throw ResourceError("state graph exceeds " + std::to_string(max_states) +
                              " states (reached " + std::to_string(sg.nodes.size() + 1) +
                              "); lower the cap or raise the state limit");
        sg.nodes.push_back(std::move(y));
        sg.arcs.emplace_back();
      }
      sg.arcs[k].push_back({it->second, w});
    }
  }
  return sg;
}

double sg_default_cap(const GraphInstance& g) {
  const BgtPlan plan = bgt_plan(g);
  const GeneratorFactory f = [&](std::uint64_t) { return bgt_generator(g, plan); };
  const std::int64_t horizon = 4 * coverage_horizon(f, 3);
  return 1.5 * emr_estimate(f, g.utilities(), 1, horizon, 0).emr;
}

SgCycle sg_optimal_deterministic(const StateGraph& sg) {
  const std::size_t v = sg.nodes.size();
  if (v == 0) throw NoFeasibleSchedule("state graph is empty; raise the cap");
  const double inf = std::numeric_limits<double>::infinity();
  RealMatrix dist(v, v, inf);
  for (std::size_t a = 0; a < v; ++a)
    for (const auto& arc : sg.arcs[a]) dist(a, arc.to) = std::min(dist(a, arc.to), arc.weight);
  kernels::minimax_closure_parallel(dist);

  std::size_t best = 0;
  for (std::size_t a = 1; a < v; ++a)
    if (dist(a, a) < dist(best, best)) best = a;
  const double opt = dist(best, best);
  if (opt == inf)
    throw NoFeasibleSchedule("no cycle survives the cap " + format_real(sg.cap) + "; raise the cap");

  // Fewest-arc cycle through `best` using arcs no heavier than the optimum.
  std::vector<int> prev(v, -1);
  std::vector<char> seen(v, 0);
  std::queue<int> q;
  q.push(static_cast<int>(best));
  seen[best] = 1;
  int closing = -1;
  while (!q.empty() && closing < 0) {
    const int a = q.front();
    q.pop();
    for (const auto& arc : sg.arcs[a]) {
      if (arc.weight > opt) continue;
      if (arc.to == static_cast<int>(best)) {
        closing = a;
        break;
      }
      if (!seen[arc.to]) {
        seen[arc.to] = 1;
        prev[arc.to] = a;
        q.push(arc.to);
      }
    }
  }
  std::vector<int> path;
  for (int a = closing; a != static_cast<int>(best); a = prev[a]) path.push_back(a);
  std::reverse(path.begin(), path.end());
  path.push_back(static_cast<int>(best));

  SgCycle c;
  c.bottleneck = opt;
  c.states = path;
  for (int s : path) c.period.push_back(sg.nodes[s].position);
  return c;
}

SgRandomGenerator::SgRandomGenerator(const GraphInstance& g, double cap, double alpha,
                                     std::uint64_t seed)
    : ScheduleGenerator(g.travel()), g_(g), cap_(cap), alpha_(alpha), rng_(seed) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha))
    throw DomainError("SG alpha must be >= 0, got " + format_real(alpha));
  for (const auto& h : g_.utilities()) tables_.emplace_back(h);
  state_.elapsed.assign(g_.size(), 0);
}

const std::vector<double>& SgRandomGenerator::weights() {
  if (weights_) return *weights_;
  const int n = g_.size();
  const Components u{g_, &tables_};
  std::vector<double> logc(n, -std::numeric_limits<double>::infinity());
  std::vector<double> logc_all = logc;
  bool any_feasible = false;
  for (int y : successor_sites(n, state_.position)) {
    const auto [next, w] = move_state(g_, state_, y, u);
    const double m = max_component(g_, next, u);
    logc_all[y] = m > 0.0 ? -alpha_ * std::log(m) : 0.0;
    if (m <= cap_ && w <= cap_) {
      logc[y] = logc_all[y];
      any_feasible = true;
    }
  }
  if (!any_feasible) logc = logc_all;
  const double top = *std::max_element(logc.begin(), logc.end());
  std::vector<double> c(n, 0.0);
  double total = 0.0;
  for (int y = 0; y < n; ++y)
    if (std::isfinite(logc[y])) total += c[y] = std::exp(logc[y] - top);
  for (auto& v : c) v /= total;
  weights_ = std::move(c);
  return *weights_;
}

std::optional<std::vector<double>> SgRandomGenerator::next_distribution() {
  if (current_site() < 0) return point_mass(size(), 0);
  return weights();
}

int SgRandomGenerator::next_site() {
  if (current_site() < 0) return 0;
  const int y = static_cast<int>(sample_index(weights(), rng_));
  state_ = move_state(g_, state_, y, Components{g_, &tables_}).first;
  weights_.reset();
  return y;
}

// ---- Factory ----

std::string alpha_domain(const std::string& kind) {
  if (kind == "tspb") return "(0, 1]";
  if (kind == "bwalk") return "[1, inf)";
  if (kind == "sg_rand") return "[0, inf)";
  if (kind == "bgt" || kind == "sg_det") return "ignored";
  throw ValidationError("unknown generator kind '" + kind +
                        "' (expected bgt, tspb, bwalk, sg_det or sg_rand)");
}

void validate_generator_spec(const GeneratorSpec& spec) {
  const std::string domain = alpha_domain(spec.kind);
  const double a = spec.alpha;
  bool ok = std::isfinite(a);
  if (spec.kind == "tspb") ok = ok && a > 0.0 && a <= 1.0;
  if (spec.kind == "bwalk") ok = ok && a >= 1.0;
  if (spec.kind == "sg_rand") ok = ok && a >= 0.0;
  if (!ok)
    throw ValidationError("alpha " + format_real(a) + " is outside the " + spec.kind +
                          " domain " + domain);
  if (spec.cap && !(*spec.cap > 0.0)) throw ValidationError("state-graph cap must be positive");
}

GeneratorFactory make_generator_factory(const GraphInstance& g, const GeneratorSpec& spec,
                                        std::size_t max_states) {
  validate_generator_spec(spec);
  auto inst = std::make_shared<const GraphInstance>(g);
  if (spec.kind == "bgt") {
    auto plan = std::make_shared<const BgtPlan>(bgt_plan(g, spec.group_order));
    return [inst, plan](std::uint64_t) { return bgt_generator(*inst, *plan); };
  }
  if (spec.kind == "tspb") {
    const double alpha = spec.alpha;
    if (g.uniform_utilities()) {
      auto tour = std::make_shared<const Tour>(tsp_tour(g));
      return [inst, tour, alpha](std::uint64_t seed) {
        return tspb_generator(inst->travel(), *tour, alpha, seed);
      };
    }
    auto plan = std::make_shared<const BgtPlan>(bgt_plan(g));
    return [inst, plan, alpha](std::uint64_t seed) -> std::unique_ptr<ScheduleGenerator> {
      return std::make_unique<TspbGenerator>(
          inst->travel(), std::make_unique<GroupedStream>(*plan, inst->travel(), 0), alpha,
          seed);
    };
  }
  if (spec.kind == "bwalk") {
    auto model = bwalk_model(g, spec.alpha);
    return [inst, model](std::uint64_t seed) { return bwalk_generator(*inst, model, seed); };
  }
  const double cap = spec.cap ? *spec.cap : sg_default_cap(g);
  if (spec.kind == "sg_det") {
    const auto cycle = sg_optimal_deterministic(sg_build(g, cap, max_states));
    auto period = std::make_shared<const std::vector<int>>(cycle.period);
    return [inst, period](std::uint64_t) { return cyclic_generator(inst->travel(), *period); };
  }
  const double alpha = spec.alpha;
  return [inst, cap, alpha](std::uint64_t seed) -> std::unique_ptr<ScheduleGenerator> {
    return std::make_unique<SgRandomGenerator>(*inst, cap, alpha, seed);
  };
}

nlohmann::json to_json(const GeneratorSpec& s) {
  nlohmann::json j{{"kind", s.kind}, {"alpha", format_real(s.alpha)}, {"seed", s.seed}};
  if (s.cap) j["cap"] = format_real(*s.cap);
  if (s.group_order != GroupOrder::tree) j["group_order"] = to_string(s.group_order);
  return j;
}

namespace {

double real_field(const nlohmann::json& v) {
  return v.is_string() ? parse_real(v.get<std::string>()) : v.get<double>();
}

}  // namespace

GeneratorSpec generator_spec_from_json(const nlohmann::json& j) {
  GeneratorSpec s;
  try {
    s.kind = j.at("kind").get<std::string>();
    if (j.contains("alpha")) s.alpha = real_field(j["alpha"]);
    if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("cap")) s.cap = real_field(j["cap"]);
    if (j.contains("group_order"))
      s.group_order = group_order_from_string(j["group_order"].get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("generator spec: ") + e.what());
  }
  validate_generator_spec(s);
  return s;
}

nlohmann::json to_json(const SgCycle& c) {
  return {{"period", c.period}, {"bottleneck", format_real(c.bottleneck)}};
}

}  // namespace psg
