#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "mzforge/quadrature.hpp"
#include "mzforge/sphere_harmonics.hpp"

using namespace mzforge;

namespace {

Eigen::VectorXcd moments(const FunctionSystem& system,
                         const DiscreteMeasure& mu) {
  Eigen::MatrixXcd phi = evaluate_system_matrix(system, mu.points);
  return phi * mu.weights.cast<Cplx>();
}

double monomial_moment(const DiscreteMeasure& mu,
                       const std::array<int, 3>& powers) {
  double s = 0.0;
  for (int i = 0; i < mu.size(); ++i) {
    double term = 1.0;
    for (int j = 0; j < 3; ++j)
      term *= std::pow(mu.points(i, j), powers[j]);
    s += mu.weights(i) * term;
  }
  return s;
}

}  // namespace

TEST_CASE("exact l2 design with pruning keeps the certificate") {
  TrigSystem system(l1ball(1, 2));  // 5 functions, difference span 9
  OptimizeConfig cfg;
  cfg.n_points = 14;  // deliberately oversampled so pruning has work to do
  cfg.seed = 7;
  cfg.max_restarts = 20;

  MzDesign des = build_exact_l2_mz(system, cfg);
  REQUIRE(des.exact);
  CHECK(des.mz_constant < 1e-13);
  CHECK(des.span_dimension == 9);
  CHECK(des.measure.size() <= 9);
  CHECK(des.measure.weights.minCoeff() > 0.0);
  CHECK(std::abs(des.measure.weights.sum() - 1.0) < 1e-12);

  // the certificate is recomputable from the shipped measure alone
  CHECK(std::abs(mz_constant(system, des.measure) - des.mz_constant) < 1e-14);

  double ip = verify_inner_product_discretization(system, des.measure, 60, 11);
  CHECK(ip <= des.mz_constant + 1e-12);
}

TEST_CASE("default point count is the difference span on the torus") {
  TrigSystem system(l1ball(2, 1));  // 5 functions, |D| = 13
  OptimizeConfig cfg;
  cfg.seed = 3;
  cfg.max_restarts = 20;
  MzDesign des = build_exact_l2_mz(system, cfg);
  REQUIRE(des.exact);
  CHECK(des.measure.size() <= 13);
  CHECK(des.mz_constant < 1e-13);
}

TEST_CASE("inner product check flags a corrupted measure") {
  TrigSystem system(l1ball(1, 1));
  OptimizeConfig cfg;
  cfg.seed = 5;
  MzDesign des = build_exact_l2_mz(system, cfg);
  REQUIRE(des.exact);

  DiscreteMeasure bad = des.measure;
  bad.weights(0) += 0.05;
  bad.weights /= bad.weights.sum();
  CHECK(verify_inner_product_discretization(system, bad, 40, 2) > 1e-4);
}

TEST_CASE("tchakaloff rule on a symmetric trig span") {
  TrigSystem system(l1ball(1, 1));  // constant in span, value rank 3
  OptimizeConfig cfg;
  cfg.seed = 13;
  QuadratureRule rule = build_tchakaloff(system, cfg);
  REQUIRE(rule.exact);
  CHECK(rule.value_span_dimension == 3);
  CHECK(rule.measure.size() <= 3);
  CHECK(rule.measure.weights.minCoeff() > 0.0);

  Eigen::VectorXcd mom = moments(system, rule.measure);
  CHECK(std::abs(mom(0)) < 1e-10);            // freq -1
  CHECK(std::abs(mom(1) - 1.0) < 1e-12);      // freq 0 integrates to one
  CHECK(std::abs(mom(2)) < 1e-10);            // freq +1
}

TEST_CASE("tchakaloff augments a span missing the constant") {
  MultiIndexSet I(1, {{1}, {2}});
  TrigSystem system(I);
  REQUIRE_FALSE(system.constant_in_span());

  OptimizeConfig cfg;
  cfg.seed = 17;
  QuadratureRule rule = build_tchakaloff(system, cfg);
  REQUIRE(rule.exact);
  CHECK(rule.measure.size() <= 5);  // 1, cos, sin at two frequencies
  CHECK(std::abs(rule.measure.weights.sum() - 1.0) < 1e-12);

  Eigen::VectorXcd mom = moments(system, rule.measure);
  CHECK(std::abs(mom(0)) < 1e-10);
  CHECK(std::abs(mom(1)) < 1e-10);
}

TEST_CASE("tchakaloff rule on the sphere matches surface monomial moments") {
  SphereSystem system(2);  // 9 harmonics
  OptimizeConfig cfg;
  cfg.seed = 23;
  cfg.max_restarts = 20;
  QuadratureRule rule = build_tchakaloff(system, cfg);
  REQUIRE(rule.exact);
  CHECK(rule.measure.size() <= 9);
  CHECK(rule.measure.weights.minCoeff() > 0.0);

  // degree <= 2 monomials under the normalized surface measure
  CHECK(std::abs(monomial_moment(rule.measure, {0, 0, 0}) - 1.0) < 1e-10);
  CHECK(std::abs(monomial_moment(rule.measure, {1, 0, 0})) < 1e-10);
  CHECK(std::abs(monomial_moment(rule.measure, {2, 0, 0}) - 1.0 / 3) < 1e-10);
  CHECK(std::abs(monomial_moment(rule.measure, {0, 2, 0}) - 1.0 / 3) < 1e-10);
  CHECK(std::abs(monomial_moment(rule.measure, {1, 1, 0})) < 1e-10);
}

TEST_CASE("tchakaloff reduction leaves span integrals unchanged") {
  TrigSystem system(l1ball(2, 1));
  OptimizeConfig base;
  base.seed = 29;
  base.max_restarts = 20;
  MzDesign full = build_exact_l2_mz(system, base);
  REQUIRE(full.exact);
  QuadratureRule rule = build_tchakaloff(system, base);
  REQUIRE(rule.exact);
  double gap = quadrature_error_vs_reference(system, rule.measure,
                                             full.measure, 50, 31);
  CHECK(gap < 1e-9);
}

TEST_CASE("even-p moment oracle agrees with grid integration") {
  MultiIndexSet I = l1ball(1, 2);
  Rng rng(97);
  Eigen::VectorXcd a(I.size());
  for (int k = 0; k < a.size(); ++k) a(k) = Cplx(rng.normal(), rng.normal());

  // |f|^4 has frequencies in {-8..8}; the mean over 32 equidistant points
  // therefore aliases nothing and equals the integral exactly.
  const int grid = 32;
  double riemann = 0.0;
  for (int g = 0; g < grid; ++g) {
    double x = static_cast<double>(g) / grid;
    Cplx f = 0.0;
    for (int k = 0; k < I.size(); ++k)
      f += a(k) * std::polar(1.0, 2.0 * M_PI * I.row(k)[0] * x);
    riemann += std::pow(std::norm(f), 2);
  }
  riemann /= grid;

  double conv = exact_lp_moment_trig(I, a, 4);
  CHECK(std::abs(conv - riemann) < 1e-9 * std::max(1.0, riemann));
}

TEST_CASE("lp design for p=4 on the pair span") {
  MultiIndexSet I(1, {{0}, {1}});
  TrigSystem system(I);
  OptimizeConfig cfg;
  cfg.seed = 37;
  cfg.max_restarts = 20;
  LpMzDesign des = build_lp_mz_even(system, 4, cfg);
  REQUIRE(des.exact);
  CHECK(des.p == 4);
  CHECK(des.lifted_dim == 3);       // frequencies {0, 1, 2}
  CHECK(des.span_dimension == 5);   // differences {-2..2}
  CHECK(des.measure.size() <= 5);

  // hand value: integral of |1 + e^(2 pi i x)|^4 is 6
  Eigen::VectorXcd ones = Eigen::VectorXcd::Ones(2);
  CHECK(std::abs(exact_lp_moment_trig(I, ones, 4) - 6.0) < 1e-12);
  Eigen::MatrixXcd phi = evaluate_system_matrix(system, des.measure.points);
  double discrete = 0.0;
  for (int i = 0; i < des.measure.size(); ++i) {
    Cplx f = phi(0, i) + phi(1, i);
    discrete += des.measure.weights(i) * std::norm(f) * std::norm(f);
  }
  CHECK(std::abs(discrete - 6.0) < 1e-10);

  CHECK(verify_lp_discretization(system, des.measure, 4, 40, 41) < 1e-10);
}

TEST_CASE("five equidistant points integrate |1+e|^4 by hand") {
  // frozen reference for the p=4 pair span: equal weights on the 5-grid
  double s = 0.0;
  for (int k = 0; k < 5; ++k) {
    Cplx f = 1.0 + std::polar(1.0, 2.0 * M_PI * k / 5.0);
    s += 0.2 * std::norm(f) * std::norm(f);
  }
  CHECK(std::abs(s - 6.0) < 1e-12);
}

TEST_CASE("p=2 lp design degenerates to the l2 builder") {
  TrigSystem system(l1ball(1, 1));
  OptimizeConfig cfg;
  cfg.seed = 43;
  LpMzDesign des = build_lp_mz_even(system, 2, cfg);
  REQUIRE(des.exact);
  CHECK(des.lifted_dim == system.dim());
  CHECK(verify_lp_discretization(system, des.measure, 2, 40, 47) < 1e-10);
}

TEST_CASE("lp design on the sphere reproduces quartic monomial moments") {
  SphereSystem system(1);
  OptimizeConfig cfg;
  cfg.seed = 53;
  cfg.max_restarts = 20;
  LpMzDesign des = build_lp_mz_even(system, 4, cfg);
  REQUIRE(des.exact);
  CHECK(des.lifted_dim == 9);  // harmonics to degree 2

  // x1 lies in the degree-1 span, so its fourth power is integrated exactly
  CHECK(std::abs(monomial_moment(des.measure, {2, 0, 0}) - 1.0 / 3) < 1e-10);
  CHECK(std::abs(monomial_moment(des.measure, {4, 0, 0}) - 1.0 / 5) < 1e-10);
  CHECK(std::abs(monomial_moment(des.measure, {2, 2, 0}) - 1.0 / 15) < 1e-10);
}

TEST_CASE("lp builder rejects bad p and oversized lifts") {
  TrigSystem small(l1ball(1, 1));
  CHECK_THROWS_AS(build_lp_mz_even(small, 3), InvalidInput);
  CHECK_THROWS_AS(build_lp_mz_even(small, 0), InvalidInput);

  TrigSystem wide(cube(2, 12));  // sumset with itself has 49^2 > 2000 entries
  CHECK_THROWS_AS(build_lp_mz_even(wide, 4), SizeLimit);

  SphereSystem sph(8);
  CHECK_THROWS_AS(build_lp_mz_even(sph, 12), SizeLimit);
}
