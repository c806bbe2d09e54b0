#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>

#include "mzforge/function_system.hpp"
#include "mzforge/rng.hpp"
#include "test_util.hpp"

using namespace mzforge;

namespace {

// exact rational phase oracle: k * (p/q) mod 1 by integer arithmetic
double rational_phase(std::int64_t k, std::int64_t p, std::int64_t q) {
  __int128 num = static_cast<__int128>(k) * p;
  __int128 r = num % q;
  if (r < 0) r += q;
  return static_cast<double>(static_cast<std::int64_t>(r)) / double(q);
}

}  // namespace

TEST_CASE("trig eval basics") {
  TrigSystem sys(l1ball(2, 4));
  REQUIRE(sys.dim() == 41);
  REQUIRE(sys.domain_dim() == 2);
  REQUIRE(sys.domain() == Domain::Torus);
  REQUIRE(sys.orthonormal_basis());
  REQUIRE(sys.constant_in_span());

  Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
  Eigen::VectorXcd v = sys.eval(zero);
  for (int k = 0; k < v.size(); ++k)
    REQUIRE(std::abs(v(k) - Cplx(1, 0)) < 1e-15);

  Rng rng(5);
  for (int t = 0; t < 10; ++t) {
    Eigen::VectorXd x(2);
    x << rng.uniform(), rng.uniform();
    Eigen::VectorXcd w = sys.eval(x);
    for (int k = 0; k < w.size(); ++k)
      REQUIRE(std::abs(std::abs(w(k)) - 1.0) < 1e-14);
  }

  REQUIRE_THROWS_AS(sys.eval(Eigen::VectorXd::Zero(3)), InvalidInput);
}

TEST_CASE("trig phases stay exact for huge frequencies at dyadic points") {
  // dyadic rationals are exactly representable, so the integer oracle applies
  TrigSystem sys(benchmark_set_1d());
  const MultiIndexSet& I = sys.index_set();
  Rng rng(11);
  for (std::int64_t q : {64, 4096, 1 << 20}) {
    for (int t = 0; t < 8; ++t) {
      std::int64_t p = static_cast<std::int64_t>(rng.below(q));
      Eigen::VectorXd x(1);
      x << double(p) / double(q);
      Eigen::VectorXcd v = sys.eval(x);
      for (int k = 0; k < I.size(); ++k) {
        double frac = rational_phase(I.row(k)[0], p, q);
        Cplx expected(std::cos(kTwoPi * frac), std::sin(kTwoPi * frac));
        REQUIRE(std::abs(v(k) - expected) < 1e-12);
      }
    }
  }
}

TEST_CASE("trig phase matches long double reference at random points") {
  TrigSystem sys(benchmark_set_2d());
  const MultiIndexSet& I = sys.index_set();
  Rng rng(17);
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd x(2);
    x << rng.uniform(), rng.uniform();
    Eigen::VectorXcd v = sys.eval(x);
    for (int k = 0; k < I.size(); ++k) {
      long double ph = 0.0L;
      for (int j = 0; j < 2; ++j) {
        long double term = static_cast<long double>(I.row(k)[j]) *
                           static_cast<long double>(x[j]);
        ph += term - floorl(term);
      }
      ph -= floorl(ph);
      Cplx expected(std::cos(static_cast<double>(kTwoPi * ph)),
                    std::sin(static_cast<double>(kTwoPi * ph)));
      REQUIRE(std::abs(v(k) - expected) < 1e-7);
    }
  }
}

TEST_CASE("trig jacobian agrees with central differences") {
  TrigSystem sys(l1ball(2, 3));
  Rng rng(23);
  double h = 1e-6;
  for (int t = 0; t < 5; ++t) {
    Eigen::VectorXd x(2);
    x << rng.uniform(), rng.uniform();
    Eigen::MatrixXcd J = sys.jacobian(x);
    for (int j = 0; j < 2; ++j) {
      Eigen::VectorXd xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      Eigen::VectorXcd fd = (sys.eval(xp) - sys.eval(xm)) / (2 * h);
      for (int k = 0; k < sys.dim(); ++k) {
        double denom = std::max(1.0, std::abs(J(k, j)));
        REQUIRE(std::abs(J(k, j) - fd(k)) / denom < 1e-6);
      }
    }
  }
}

TEST_CASE("christoffel rescale augments and normalizes") {
  // base {sqrt(2) cos(2 pi x)}: constant not in span -> augmented, m = 2
  auto base = std::make_shared<mztest::RealTrigSystem>(
      std::vector<std::pair<int, bool>>{{1, false}});
  auto resc = christoffel_rescale(base);
  REQUIRE(resc->augmented());
  REQUIRE(resc->dim() == 2);

  Rng rng(31);
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd x(1);
    x << rng.uniform();
    double c = std::cos(kTwoPi * x[0]);
    REQUIRE(resc->eta(x) == Catch::Approx((1 + 2 * c * c) / 2.0).epsilon(1e-12));
    Eigen::VectorXcd psi = resc->eval(x);
    REQUIRE(psi.squaredNorm() == Catch::Approx(2.0).epsilon(1e-12));
  }
}

TEST_CASE("full trig system rescale is the identity") {
  auto base = std::make_shared<TrigSystem>(l1ball(1, 2));
  auto resc = christoffel_rescale(base);
  REQUIRE_FALSE(resc->augmented());
  REQUIRE(resc->dim() == base->dim());
  Rng rng(41);
  Eigen::VectorXd x(1);
  x << rng.uniform();
  REQUIRE(resc->eta(x) == Catch::Approx(1.0).epsilon(1e-13));
  REQUIRE((resc->eval(x) - base->eval(x)).norm() < 1e-12);
}

TEST_CASE("christoffel jacobian agrees with central differences") {
  auto base = std::make_shared<mztest::RealTrigSystem>(
      std::vector<std::pair<int, bool>>{{1, false}, {2, true}});
  auto resc = christoffel_rescale(base);
  Rng rng(47);
  double h = 1e-6;
  for (int t = 0; t < 10; ++t) {
    Eigen::VectorXd x(1);
    x << rng.uniform();
    Eigen::MatrixXcd J = resc->jacobian(x);
    Eigen::VectorXd xp = x, xm = x;
    xp[0] += h;
    xm[0] -= h;
    Eigen::VectorXcd fd = (resc->eval(xp) - resc->eval(xm)) / (2 * h);
    for (int k = 0; k < resc->dim(); ++k) {
      double denom = std::max(1.0, std::abs(J(k, 0)));
      REQUIRE(std::abs(J(k, 0) - fd(k)) / denom < 1e-5);
    }
  }
}

namespace {
// claims the constant is in span although it is not; eta then vanishes at 0
class LyingSineSystem : public mztest::RealTrigSystem {
 public:
  LyingSineSystem()
      : mztest::RealTrigSystem(std::vector<std::pair<int, bool>>{{1, true}}) {}
  bool constant_in_span() const override { return true; }
};
}  // namespace

TEST_CASE("degenerate christoffel density is reported") {
  auto resc = christoffel_rescale(std::make_shared<LyingSineSystem>());
  Eigen::VectorXd x(1);
  x << 0.0;
  REQUIRE_THROWS_AS(resc->eval(x), DegenerateChristoffel);
}
