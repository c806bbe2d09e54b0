#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "mzforge/benchmarks.hpp"
#include "mzforge/design.hpp"
#include "mzforge/lattice.hpp"
#include "mzforge/quadrature.hpp"

using namespace mzforge;

TEST_CASE("centered grid is its own minimal lattice") {
  MultiIndexSet I = centered_grid(1, 8);
  LatticeSearchResult res = minimal_lattice_size(I, 40);
  REQUIRE(res.found);
  CHECK(res.lattice.size == 8);
  CHECK(res.lattice.generator == Index{1});
  CHECK(reconstructs(I, res.lattice));

  // exact-phase evaluation and the generic float path agree
  CHECK(lattice_mz_constant(I, res.lattice) < 1e-13);
  TrigSystem system(I);
  CHECK(mz_constant(system, lattice_measure(res.lattice)) < 1e-12);
}

TEST_CASE("pigeonhole pins the 3x3 grid at nine nodes") {
  MultiIndexSet I = cube(2, 1);
  LatticeSearchResult res = minimal_lattice_size(I, 30);
  REQUIRE(res.found);
  CHECK(res.lattice.size == 9);  // cannot beat |I| distinct residues

  Rank1Lattice good{9, {1, 3}};
  CHECK(reconstructs(I, good));
  Rank1Lattice aliased{9, {1, 1}};  // difference (1,-1) maps to zero
  CHECK_FALSE(reconstructs(I, aliased));
}

TEST_CASE("reconstructs input handling") {
  MultiIndexSet I = l1ball(1, 2);
  CHECK_THROWS_AS(reconstructs(I, Rank1Lattice{5, {1, 1}}), InvalidInput);
  CHECK_THROWS_AS(reconstructs(I, Rank1Lattice{0, {1}}), InvalidInput);
  CHECK_FALSE(reconstructs(I, Rank1Lattice{3, {1}}));  // fewer nodes than |I|

  // generators are equivalent modulo the size
  Rank1Lattice base{7, {3}};
  Rank1Lattice shifted{7, {3 + 7}};
  CHECK(reconstructs(I, base) == reconstructs(I, shifted));
  Rank1Lattice negative{7, {3 - 7}};
  CHECK(reconstructs(I, base) == reconstructs(I, negative));
}

TEST_CASE("reconstructing lattices carry exact discretizations") {
  Rng rng(2026);
  int found = 0;
  for (int trial = 0; trial < 25; ++trial) {
    int d = 1 + static_cast<int>(rng.below(2));
    int target = 3 + static_cast<int>(rng.below(5));
    std::set<Index> rows;
    while (static_cast<int>(rows.size()) < target) {
      Index k(d);
      for (int j = 0; j < d; ++j)
        k[j] = static_cast<std::int64_t>(rng.below(25)) - 12;
      rows.insert(k);
    }
    MultiIndexSet I(d, {rows.begin(), rows.end()});
    LatticeSearchResult res = minimal_lattice_size(I, 200);
    REQUIRE(res.found);
    ++found;
    CHECK(lattice_mz_constant(I, res.lattice) < 1e-12);

    TrigSystem system(I);
    DiscreteMeasure mu = lattice_measure(res.lattice);
    CHECK(mz_constant(system, mu) < 1e-10);
  }
  CHECK(found == 25);
}

TEST_CASE("scattered 1-d benchmark set reconstructs from 31 nodes") {
  MultiIndexSet I = benchmark_index_set("exp3-1d");
  LatticeSearchResult res = minimal_lattice_size(I, 120);
  REQUIRE(res.found);
  CHECK(res.lattice.size == 31);
  CHECK(res.lattice.generator == Index{1});
  CHECK(reconstructs(I, res.lattice));
  CHECK(lattice_mz_constant(I, res.lattice) < 1e-13);
}

TEST_CASE("diagonal 2-d benchmark set needs 113 nodes") {
  MultiIndexSet I = benchmark_index_set("exp1-i3");
  LatticeSearchResult res = minimal_lattice_size(I, 120);
  REQUIRE(res.found);
  CHECK(res.lattice.size == 113);
  CHECK(reconstructs(I, res.lattice));
  CHECK(lattice_mz_constant(I, res.lattice) < 1e-13);
}

TEST_CASE("search budget yields a partial result") {
  MultiIndexSet I = benchmark_index_set("exp1-i3");
  LatticeSearchResult res = minimal_lattice_size(I, 120, 1000);
  CHECK_FALSE(res.found);
  CHECK(res.budget_exhausted);
  CHECK(res.candidates_tried == 1000);
}

TEST_CASE("fooling pair construction") {
  MultiIndexSet p1 = fooling_index_set({0}, {1}, 3);
  CHECK(p1.row(0) == Index{0});
  CHECK(p1.row(1) == Index{6});

  MultiIndexSet p2 = fooling_index_set({0, 0}, {1, 1}, 4);
  CHECK(p2.row(0) == Index{0, 0});
  CHECK(p2.row(1) == Index{24, 24});

  MultiIndexSet p3 = fooling_index_set({5}, {2}, 4);
  CHECK(p3.row(0) == Index{5});
  CHECK(p3.row(1) == Index{53});

  CHECK_THROWS_AS(fooling_index_set({0}, {1}, 21), BigIntRequired);
  CHECK_THROWS_AS(fooling_index_set({0}, {0}, 3), InvalidInput);
  CHECK_THROWS_AS(fooling_index_set({0, 0}, {1}, 3), InvalidInput);
}

TEST_CASE("fooling certificate is exhaustive and sharp") {
  for (int cap = 3; cap <= 6; ++cap) {
    MultiIndexSet pair = fooling_index_set({0}, {1}, cap);
    FoolingCertificate cert = verify_fooling(pair, cap);
    CHECK(cert.max_abs_on_nodes < 1e-9);
    CHECK(cert.lattices_checked ==
          static_cast<long long>(cap) * (cap + 1) / 2);
    CHECK(cert.l2_norm_sq == 2.0);

    // the witness mass comes out of the coefficient convolution as well
    Eigen::VectorXcd coeffs(2);
    coeffs << Cplx(-1.0, 0.0), Cplx(1.0, 0.0);
    CHECK(exact_lp_moment_trig(pair, coeffs, 2) == Catch::Approx(2.0));
  }

  // one more node than the cap separates the pair when the modulus is prime
  MultiIndexSet p4 = fooling_index_set({0}, {1}, 4);
  CHECK(reconstructs(p4, Rank1Lattice{5, {1}}));

  MultiIndexSet p2d = fooling_index_set({0, 0}, {1, 1}, 4);
  FoolingCertificate cert = verify_fooling(p2d, 4);
  CHECK(cert.max_abs_on_nodes < 1e-9);
  CHECK(cert.lattices_checked == 1 + 4 + 9 + 16);
  CHECK(cert.nodes_checked == 36);  // six reduced fractions per coordinate

  CHECK_THROWS_AS(verify_fooling(cube(1, 1), 3), InvalidInput);
}

TEST_CASE("lattice measure is a valid probability measure") {
  Rank1Lattice lat{6, {-5, 2}};
  DiscreteMeasure mu = lattice_measure(lat);
  mu.validate();
  CHECK(mu.size() == 6);
  CHECK(mu.points.minCoeff() >= 0.0);
  CHECK(mu.points.maxCoeff() < 1.0);
  // -5 = 1 mod 6: first coordinate steps by 1/6
  CHECK(mu.points(1, 0) == Catch::Approx(1.0 / 6.0));
  CHECK(mu.points(1, 1) == Catch::Approx(2.0 / 6.0));
}
