#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "psg/decimal.hpp"
#include "psg/error.hpp"
#include "psg/instance.hpp"

using namespace psg;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream(p) << text;
  return p;
}

void check_invariants(const GraphInstance& g) {
  const int n = g.size();
  for (int i = 0; i < n; ++i) {
    CHECK(g.travel(i, i) == 0);
    for (int j = 0; j < n; ++j) {
      CHECK(g.travel(i, j) == g.travel(j, i));
      if (i != j) CHECK(g.travel(i, j) >= 1);
      for (int k = 0; k < n; ++k) CHECK(g.travel(i, k) <= g.travel(i, j) + g.travel(j, k));
    }
  }
}

}  // namespace

TEST_CASE("utility evaluation") {
  CHECK(eval_utility(PolyUtility::constant(2), 5) == 2);
  CHECK(eval_utility(PolyUtility({0, 1}), 3) == 3);
  CHECK(eval_utility(PolyUtility({1, 0, 1}), 4) == 17);
  CHECK_THROWS_AS(eval_utility(PolyUtility::constant(1), 0), DomainError);
  CHECK_THROWS_AS(PolyUtility({-1.0}), ValidationError);
  CHECK_THROWS_AS(PolyUtility(std::vector<double>{}), ValidationError);
}

TEST_CASE("cumulative utility") {
  CHECK(cumulative_utility(PolyUtility::constant(1), 7) == 7);
  CHECK(cumulative_utility(PolyUtility({0, 1}), 4) == 10);
  CHECK(cumulative_utility(PolyUtility({0, 0, 1}), 3) == 14);
  CHECK(cumulative_utility(PolyUtility({0, 0, 1}), 0) == 0);
  const PolyUtility u({0.3, 0.7, 0.11});
  CumulativeTable table(u);
  for (int t = 1; t <= 50; ++t) {
    CHECK(cumulative_utility(u, t) - cumulative_utility(u, t - 1) == doctest::Approx(u(t)));
    CHECK(table(t) == cumulative_utility(u, t));
  }
}

TEST_CASE("random instances") {
  const auto one = generate_random_instance(1, 100, 7);
  CHECK(one.size() == 1);
  CHECK(one.travel(0, 0) == 0);

  const auto g30 = generate_random_instance(30, 1000, 11);
  CHECK(g30.size() == 30);
  check_invariants(g30);

  const UtilitySpec quad{2, 0.001, 1.0, false};
  CHECK(generate_random_instance(5, 10, 42, quad) == generate_random_instance(5, 10, 42, quad));
  CHECK_FALSE(generate_random_instance(5, 10, 42) == generate_random_instance(5, 10, 43));
  const auto g5 = generate_random_instance(5, 10, 42, quad);
  for (const auto& u : g5.utilities()) {
    CHECK(u.degree() == 2);
    for (double c : u.coefficients()) CHECK((c >= 0.001 && c <= 1.0));
  }

  CHECK_THROWS_AS(generate_random_instance(0, 10, 1), ValidationError);
  CHECK_THROWS_AS(generate_random_instance(3, 0, 1), ValidationError);
  CHECK_THROWS_AS(generate_random_instance(3, -5, 1), ValidationError);
}

TEST_CASE("instance validation") {
  std::vector<Site> sites{{0, 0, 0}, {1, 1, 0}, {2, 2, 0}};
  IntMatrix t(3, 3, 1);
  for (int i = 0; i < 3; ++i) t(i, i) = 0;
  const std::vector<PolyUtility> u(3, PolyUtility::constant(1));
  CHECK_NOTHROW(GraphInstance(sites, t, u));
  auto bad = t;
  bad(0, 2) = bad(2, 0) = 5;
  CHECK_THROWS_AS(GraphInstance(sites, bad, u), ValidationError);
  bad = t;
  bad(0, 1) = 2;
  CHECK_THROWS_AS(GraphInstance(sites, bad, u), ValidationError);
  CHECK_THROWS_AS(GraphInstance(sites, t, {PolyUtility::constant(1)}), ValidationError);
  CHECK_THROWS_AS(GraphInstance(sites, t, u, -1.0), ValidationError);
}

TEST_CASE("site CSV loading") {
  auto p = write_temp("psg_sites_345.csv", "id,x,y\n0,0,0\n1,3,4\n");
  const auto g = load_sites_csv(p);
  CHECK(g.travel(0, 1) == 5);

  p = write_temp("psg_sites_c0.csv", "id,x,y,c0\n0,0,0,2.5\n1,1,1,0.5\n");
  const auto h = load_sites_csv(p);
  CHECK(h.utility(0) == PolyUtility::constant(2.5));
  CHECK(h.utility(1) == PolyUtility::constant(0.5));

  p = write_temp("psg_sites_bad.csv", "id,x,y\n0,0,0\n1,abc,4\n");
  try {
    load_sites_csv(p);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 3") != std::string::npos);
    CHECK(msg.find("'x'") != std::string::npos);
  }
  p = write_temp("psg_sites_dup.csv", "id,x,y\n0,0,0\n0,1,1\n");
  CHECK_THROWS_AS(load_sites_csv(p), ParseError);
  p = write_temp("psg_sites_gap.csv", "id,x,y\n0,0,0\n2,1,1\n");
  CHECK_THROWS_AS(load_sites_csv(p), ParseError);
  CHECK_THROWS_AS(load_sites_csv("/nonexistent/sites.csv"), ParseError);
}

TEST_CASE("instance JSON round trip") {
  const auto g = generate_random_instance(6, 50, 3, {2, 0.001, 1.0, false}, 3.25);
  const auto j = to_json(g);
  CHECK(j.contains("sites"));
  CHECK(j.contains("travel"));
  CHECK(j.contains("utilities"));
  CHECK(j.contains("penalty"));
  CHECK(instance_from_json(j) == g);
  const auto path = std::filesystem::temp_directory_path() / "psg_instance.json";
  save_instance(g, path);
  CHECK(load_instance(path) == g);
}

TEST_CASE("decimal strings round trip") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.678, 0.0})
    CHECK(parse_real(format_real(v)) == v);
  CHECK_THROWS_AS(parse_real("x1"), ParseError);
}
