#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "mzforge/multi_index.hpp"

using namespace mzforge;

TEST_CASE("generator cardinalities") {
  REQUIRE(l1ball(2, 4).size() == 41);
  REQUIRE(l1ball(1, 4).size() == 9);
  REQUIRE(l1ball(3, 0).size() == 1);
  REQUIRE(hyperbolic(2, 6).size() == 33);
  REQUIRE(hyperbolic(1, 4).size() == 7);
  REQUIRE(cube(2, 1).size() == 9);
  REQUIRE(cube(1, 4).size() == 9);
  REQUIRE(centered_grid(1, 8).size() == 8);
  REQUIRE(centered_grid(2, 8).size() == 64);
}

TEST_CASE("centered grid spans -ceil(n/2) .. floor(n/2)-1") {
  MultiIndexSet g = centered_grid(1, 8);
  REQUIRE(g.contains({-4}));
  REQUIRE(g.contains({3}));
  REQUIRE_FALSE(g.contains({4}));
  REQUIRE_FALSE(g.contains({-5}));
  MultiIndexSet g5 = centered_grid(1, 5);
  REQUIRE(g5.contains({-2}));
  REQUIRE(g5.contains({2}));
  REQUIRE(g5.size() == 5);
}

TEST_CASE("constructor validation") {
  REQUIRE_THROWS_AS(MultiIndexSet(2, {{0, 0}, {0, 0}}), InvalidInput);
  REQUIRE_THROWS_AS(MultiIndexSet(2, {{0, 0}, {1}}), InvalidInput);
  REQUIRE_THROWS_AS(MultiIndexSet(0, {{}}), InvalidInput);
  REQUIRE_THROWS_AS(MultiIndexSet(1, {}), InvalidInput);
  REQUIRE_THROWS_AS(l1ball(0, 3), InvalidInput);
  REQUIRE_THROWS_AS(hyperbolic(2, 0), InvalidInput);
}

TEST_CASE("difference set basics") {
  MultiIndexSet I(1, {{0}, {1}, {3}});
  MultiIndexSet D = difference_set(I);
  REQUIRE(D.size() == 7);
  for (std::int64_t v : {-3, -2, -1, 0, 1, 2, 3}) REQUIRE(D.contains({v}));
  // symmetry
  for (int i = 0; i < D.size(); ++i) {
    Index neg = D.row(i);
    for (auto& c : neg) c = -c;
    REQUIRE(D.contains(neg));
  }
}

TEST_CASE("benchmark sets have difference dimension 91") {
  REQUIRE(benchmark_set_2d().size() == 10);
  REQUIRE(benchmark_set_1d().size() == 10);
  REQUIRE(difference_set(benchmark_set_2d()).size() == 91);
  REQUIRE(difference_set(benchmark_set_1d()).size() == 91);
}

TEST_CASE("helpers") {
  MultiIndexSet I(2, {{0, 0}, {2, -5}, {-3, 1}});
  REQUIRE(I.contains_zero());
  REQUIRE(I.max_abs(0) == 3);
  REQUIRE(I.max_abs(1) == 5);
  MultiIndexSet J(1, {{1}, {2}});
  REQUIRE_FALSE(J.contains_zero());
}

TEST_CASE("json round trip and file loading") {
  MultiIndexSet I = hyperbolic(2, 4);
  nlohmann::json j = index_set_to_json(I);
  MultiIndexSet back = index_set_from_json(j);
  REQUIRE(back.size() == I.size());
  REQUIRE(back.dim() == I.dim());
  for (int i = 0; i < I.size(); ++i) REQUIRE(back.contains(I.row(i)));

  std::string path = "mzforge_test_index.json";
  {
    std::ofstream out(path);
    out << j.dump();
  }
  MultiIndexSet loaded = index_set_from_file(path);
  REQUIRE(loaded.size() == I.size());
  std::remove(path.c_str());

  REQUIRE_THROWS_AS(index_set_from_file("does_not_exist.json"), InvalidInput);
  REQUIRE_THROWS_AS(index_set_from_json(nlohmann::json::array()), InvalidInput);
  REQUIRE_THROWS_AS(index_set_from_json(nlohmann::json::parse("[[0.5]]")),
                    InvalidInput);
}
