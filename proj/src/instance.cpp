#include "psg/instance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "psg/decimal.hpp"
#include "psg/error.hpp"
#include "psg/rng.hpp"

namespace psg {

PolyUtility::PolyUtility(std::vector<double> coefficients)
    : coeffs_(std::move(coefficients)) {
  if (coeffs_.empty())
    throw ValidationError("utility needs at least one coefficient");
  for (double c : coeffs_) {
    if (!(c >= 0.0) || !std::isfinite(c))
      throw ValidationError("utility coefficients must be finite and >= 0");
  }
}

double PolyUtility::coefficient(int k) const {
  return k >= 0 && k < static_cast<int>(coeffs_.size()) ? coeffs_[k] : 0.0;
}

bool PolyUtility::is_zero() const {
  return std::all_of(coeffs_.begin(), coeffs_.end(),
                     [](double c) { return c == 0.0; });
}

bool PolyUtility::is_constant() const {
  return std::all_of(coeffs_.begin() + 1, coeffs_.end(),
                     [](double c) { return c == 0.0; });
}

double PolyUtility::operator()(std::int64_t t) const {
  if (t <= 0) throw DomainError("utility evaluated at t <= 0");
  // Horner
  double acc = 0.0;
  const double x = static_cast<double>(t);
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

double eval_utility(const PolyUtility& u, std::int64_t t) { return u(t); }

double cumulative_utility(const PolyUtility& u, std::int64_t duration) {
  double acc = 0.0;
  for (std::int64_t t = 1; t <= duration; ++t) acc += u(t);
  return acc;
}

double CumulativeTable::operator()(std::int64_t duration) {
  if (duration <= 0) return 0.0;
  while (static_cast<std::int64_t>(prefix_.size()) <= duration) {
    const auto t = static_cast<std::int64_t>(prefix_.size());
    prefix_.push_back(prefix_.back() + u_(t));
  }
  return prefix_[duration];
}

void validate_travel(const IntMatrix& travel) {
  const std::size_t n = travel.rows();
  if (travel.cols() != n) throw ValidationError("travel matrix must be square");
  for (std::size_t i = 0; i < n; ++i) {
    if (travel(i, i) != 0)
      throw ValidationError("travel matrix diagonal must be zero (site " +
                            std::to_string(i) + ")");
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (travel(i, j) <= 0)
        throw ValidationError("travel time must be positive between sites " +
                              std::to_string(i) + " and " + std::to_string(j));
      if (travel(i, j) != travel(j, i))
        throw ValidationError("travel matrix must be symmetric at (" +
                              std::to_string(i) + "," + std::to_string(j) + ")");
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        if (travel(i, k) > travel(i, j) + travel(j, k))
          throw ValidationError("triangle inequality violated for (" +
                                std::to_string(i) + "," + std::to_string(j) +
                                "," + std::to_string(k) + ")");
}

GraphInstance::GraphInstance(std::vector<Site> sites, IntMatrix travel,
                             std::vector<PolyUtility> utilities, double penalty)
    : sites_(std::move(sites)),
      travel_(std::move(travel)),
      utilities_(std::move(utilities)),
      penalty_(penalty) {
  if (sites_.empty()) throw ValidationError("instance has no sites");
  for (std::size_t i = 0; i < sites_.size(); ++i)
    if (sites_[i].id != static_cast<int>(i))
      throw ValidationError("site ids must be contiguous 0..n-1");
  if (travel_.rows() != sites_.size())
    throw ValidationError("travel matrix size does not match site count");
  if (utilities_.size() != sites_.size())
    throw ValidationError("need exactly one utility per site");
  if (!(penalty_ >= 0.0) || !std::isfinite(penalty_))
    throw ValidationError("penalty must be finite and >= 0");
  validate_travel(travel_);
}

int GraphInstance::diameter() const {
  int d = 0;
  for (int v : travel_.data()) d = std::max(d, v);
  return d;
}

int GraphInstance::max_degree() const {
  int d = 0;
  for (const auto& u : utilities_) d = std::max(d, u.degree());
  return d;
}

bool GraphInstance::uniform_utilities() const {
  return std::all_of(utilities_.begin(), utilities_.end(),
                     [&](const PolyUtility& u) { return u == utilities_[0]; });
}

GraphInstance GraphInstance::with_penalty(double penalty) const {
  return GraphInstance(sites_, travel_, utilities_, penalty);
}

GraphInstance GraphInstance::with_utilities(
    std::vector<PolyUtility> utilities) const {
  return GraphInstance(sites_, travel_, std::move(utilities), penalty_);
}

IntMatrix travel_from_coordinates(const std::vector<Site>& sites) {
  const std::size_t n = sites.size();
  IntMatrix travel(n, n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d =
          std::hypot(sites[i].x - sites[j].x, sites[i].y - sites[j].y);
      // 1e-9 absorbs rounding noise in hypot so exact integers stay exact.
      const int slots = std::max(1, static_cast<int>(std::ceil(d - 1e-9)));
      travel(i, j) = travel(j, i) = slots;
    }
  }
  // Metric repair; a no-op unless rounding broke a collinear triple.
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j && travel(i, k) + travel(k, j) < travel(i, j))
          travel(i, j) = travel(i, k) + travel(k, j);
  return travel;
}

GraphInstance unit_instance(std::vector<PolyUtility> utilities, double penalty) {
  const std::size_t n = utilities.size();
  std::vector<Site> sites;
  for (std::size_t i = 0; i < n; ++i)
    sites.push_back({static_cast<int>(i), static_cast<double>(i), 0.0});
  IntMatrix travel(n, n, 1);
  for (std::size_t i = 0; i < n; ++i) travel(i, i) = 0;
  return GraphInstance(std::move(sites), std::move(travel),
                       std::move(utilities), penalty);
}

namespace {

void check_spec(const UtilitySpec& spec) {
  if (spec.degree < 0) throw ValidationError("utility degree must be >= 0");
  if (!(spec.coef_lo > 0.0) || !(spec.coef_hi >= spec.coef_lo) ||
      !std::isfinite(spec.coef_hi))
    throw ValidationError("coefficient range must satisfy 0 < lo <= hi < inf");
}

PolyUtility draw_utility(const UtilitySpec& spec, Rng& rng) {
  std::uniform_real_distribution<double> coef(spec.coef_lo, spec.coef_hi);
  std::vector<double> c(spec.degree + 1);
  for (auto& v : c) v = coef(rng);
  return PolyUtility(std::move(c));
}

std::vector<PolyUtility> draw_utilities(std::size_t n, const UtilitySpec& spec,
                                        Rng& rng) {
  std::vector<PolyUtility> out;
  if (spec.shared) {
    out.assign(n, draw_utility(spec, rng));
  } else {
    for (std::size_t i = 0; i < n; ++i) out.push_back(draw_utility(spec, rng));
  }
  return out;
}

}  // namespace

GraphInstance generate_random_instance(int n, double side, std::uint64_t seed,
                                       const UtilitySpec& spec, double penalty) {
  if (n <= 0) throw ValidationError("instance must have at least one site");
  if (!(side > 0.0) || !std::isfinite(side))
    throw ValidationError("square side must be positive");
  check_spec(spec);
  Rng rng(seed);
  std::uniform_real_distribution<double> coord(0.0, side);
  std::vector<Site> sites;
  for (int i = 0; i < n; ++i) {
    const double x = coord(rng);
    const double y = coord(rng);
    sites.push_back({i, x, y});
  }
  auto travel = travel_from_coordinates(sites);
  auto utilities = draw_utilities(sites.size(), spec, rng);
  return GraphInstance(std::move(sites), std::move(travel),
                       std::move(utilities), penalty);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && s[b] == ' ') ++b;
  return s.substr(b);
}

}  // namespace

GraphInstance load_sites_csv(const std::filesystem::path& path,
                             const UtilitySpec& spec, std::uint64_t seed,
                             double penalty) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open site file '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line))
    throw ParseError(path.string() + ": missing header");
  auto header = split_csv_line(line);
  for (auto& h : header) h = trim(h);
  if (header.size() < 3 || header[0] != "id" || header[1] != "x" ||
      header[2] != "y")
    throw ParseError(path.string() + ": header must start with id,x,y");
  for (std::size_t c = 3; c < header.size(); ++c) {
    if (header[c] != "c" + std::to_string(c - 3))
      throw ParseError(path.string() + ": expected column c" +
                       std::to_string(c - 3) + ", found '" + header[c] + "'");
  }
  const std::size_t n_coef = header.size() - 3;

  std::map<int, std::pair<Site, std::vector<double>>> rows;
  int row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw ParseError(path.string() + ": row " + std::to_string(row_no) +
                       " has " + std::to_string(cells.size()) +
                       " fields, expected " + std::to_string(header.size()));
    std::vector<double> values;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      try {
        values.push_back(parse_real(cells[c]));
      } catch (const ParseError&) {
        throw ParseError(path.string() + ": row " + std::to_string(row_no) +
                         ", column '" + header[c] + "': not a number: '" +
                         trim(cells[c]) + "'");
      }
    }
    const double id_value = values[0];
    if (id_value != std::floor(id_value) || id_value < 0)
      throw ParseError(path.string() + ": row " + std::to_string(row_no) +
                       ", column 'id': ids must be nonnegative integers");
    const int id = static_cast<int>(id_value);
    if (rows.count(id))
      throw ParseError(path.string() + ": row " + std::to_string(row_no) +
                       ": duplicate id " + std::to_string(id));
    rows[id] = {Site{id, values[1], values[2]},
                std::vector<double>(values.begin() + 3, values.end())};
  }
  if (rows.empty()) throw ValidationError(path.string() + ": no sites");

  std::vector<Site> sites;
  std::vector<std::vector<double>> coefs;
  int expect = 0;
  for (auto& [id, row] : rows) {
    if (id != expect)
      throw ParseError(path.string() + ": ids must be contiguous from 0; missing " +
                       std::to_string(expect));
    sites.push_back(row.first);
    coefs.push_back(row.second);
    ++expect;
  }
  auto travel = travel_from_coordinates(sites);
  std::vector<PolyUtility> utilities;
  if (n_coef > 0) {
    for (auto& c : coefs) utilities.emplace_back(std::move(c));
  } else {
    check_spec(spec);
    Rng rng(seed);
    utilities = draw_utilities(sites.size(), spec, rng);
  }
  return GraphInstance(std::move(sites), std::move(travel),
                       std::move(utilities), penalty);
}

nlohmann::json to_json(const GraphInstance& g) {
  nlohmann::json j;
  j["sites"] = nlohmann::json::array();
  for (const auto& s : g.sites())
    j["sites"].push_back(
        {{"id", s.id}, {"x", format_real(s.x)}, {"y", format_real(s.y)}});
  j["travel"] = nlohmann::json::array();
  for (int i = 0; i < g.size(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int k = 0; k < g.size(); ++k) row.push_back(g.travel(i, k));
    j["travel"].push_back(row);
  }
  j["utilities"] = nlohmann::json::array();
  for (const auto& u : g.utilities()) {
    nlohmann::json c = nlohmann::json::array();
    for (double v : u.coefficients()) c.push_back(format_real(v));
    j["utilities"].push_back(c);
  }
  j["penalty"] = format_real(g.penalty());
  return j;
}

namespace {

double real_field(const nlohmann::json& v) {
  if (v.is_string()) return parse_real(v.get<std::string>());
  if (v.is_number()) return v.get<double>();
  throw ParseError("expected a decimal string or number");
}

}  // namespace

GraphInstance instance_from_json(const nlohmann::json& j) {
  try {
    std::vector<Site> sites;
    for (const auto& s : j.at("sites"))
      sites.push_back({s.at("id").get<int>(), real_field(s.at("x")),
                       real_field(s.at("y"))});
    const std::size_t n = sites.size();
    const auto& rows = j.at("travel");
    if (rows.size() != n) throw ValidationError("travel matrix size mismatch");
    IntMatrix travel(n, n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (rows[i].size() != n) throw ValidationError("travel row size mismatch");
      for (std::size_t k = 0; k < n; ++k) travel(i, k) = rows[i][k].get<int>();
    }
    std::vector<PolyUtility> utilities;
    for (const auto& c : j.at("utilities")) {
      std::vector<double> coef;
      for (const auto& v : c) coef.push_back(real_field(v));
      utilities.emplace_back(std::move(coef));
    }
    const double penalty = j.contains("penalty") ? real_field(j["penalty"]) : 0.0;
    return GraphInstance(std::move(sites), std::move(travel),
                         std::move(utilities), penalty);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed instance JSON: ") + e.what());
  }
}

void save_instance(const GraphInstance& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << to_json(g).dump(2) << '\n';
}

GraphInstance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open instance '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return instance_from_json(j);
}

}  // namespace psg
