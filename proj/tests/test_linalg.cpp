#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <limits>

#include "mzforge/linalg.hpp"
#include "mzforge/rng.hpp"

using namespace mzforge;

namespace {

Eigen::MatrixXcd random_hermitian(int m, Rng& rng) {
  Eigen::MatrixXcd a(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) a(i, j) = Cplx(rng.normal(), rng.normal());
  return Eigen::MatrixXcd(0.5 * (a + a.adjoint()));
}

Eigen::MatrixXcd random_psd(int m, Rng& rng) {
  Eigen::MatrixXcd b(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) b(i, j) = Cplx(rng.normal(), rng.normal());
  return Eigen::MatrixXcd(b * b.adjoint() / double(m));
}

}  // namespace

TEST_CASE("construction symmetrizes") {
  Eigen::MatrixXcd raw(2, 2);
  raw << Cplx(1, 0), Cplx(2, 1), Cplx(0, 0), Cplx(3, 0);
  HermitianMatrix a(raw);
  Eigen::MatrixXcd expected = 0.5 * (raw + raw.adjoint());
  REQUIRE((a.entries() - expected).norm() == 0.0);
  REQUIRE((a.entries() - a.entries().adjoint()).norm() < 1e-15);
}

TEST_CASE("eigh identity and swap matrix") {
  HermitianMatrix id(Eigen::MatrixXcd::Identity(3, 3));
  EighResult e = hermitian_eigh(id);
  for (int k = 0; k < 3; ++k) REQUIRE(e.eigenvalues[k] == Catch::Approx(1.0));

  Eigen::MatrixXcd swap(2, 2);
  swap << Cplx(0, 0), Cplx(1, 0), Cplx(1, 0), Cplx(0, 0);
  EighResult s = hermitian_eigh(HermitianMatrix(swap));
  REQUIRE(s.eigenvalues[0] == Catch::Approx(-1.0));
  REQUIRE(s.eigenvalues[1] == Catch::Approx(1.0));
}

TEST_CASE("eigh reconstruction and ascending order on random matrices") {
  Rng rng(7321);
  for (int trial = 0; trial < 25; ++trial) {
    int m = 2 + int(rng.below(7));
    Eigen::MatrixXcd a = random_hermitian(m, rng);
    HermitianMatrix h(a);
    EighResult e = hermitian_eigh(h);
    for (int k = 1; k < m; ++k)
      REQUIRE(e.eigenvalues[k] >= e.eigenvalues[k - 1]);
    Eigen::MatrixXcd rec = e.eigenvectors *
                           e.eigenvalues.asDiagonal().toDenseMatrix().cast<Cplx>() *
                           e.eigenvectors.adjoint();
    REQUIRE((rec - h.entries()).norm() <= 1e-10 * (1.0 + h.entries().norm()));
    Eigen::MatrixXcd uu = e.eigenvectors.adjoint() * e.eigenvectors;
    REQUIRE((uu - Eigen::MatrixXcd::Identity(m, m)).norm() < 1e-12);
  }
}

TEST_CASE("eigh rejects non-finite input") {
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Identity(2, 2);
  a(0, 0) = Cplx(std::numeric_limits<double>::quiet_NaN(), 0);
  REQUIRE_THROWS_AS(hermitian_eigh(HermitianMatrix(a)), InvalidInput);
}

TEST_CASE("spectral distance to identity") {
  Eigen::VectorXd d(3);
  d << 0.5, 1.0, 1.5;
  HermitianMatrix a(Eigen::MatrixXcd(d.cast<Cplx>().asDiagonal()));
  REQUIRE(spectral_distance_to_identity(a) == Catch::Approx(0.5));
  HermitianMatrix id(Eigen::MatrixXcd::Identity(4, 4));
  REQUIRE(spectral_distance_to_identity(id) <= 1e-12);
}

TEST_CASE("log det values and sentinels") {
  Eigen::VectorXd d(2);
  d << 2.0, 0.5;
  HermitianMatrix a(Eigen::MatrixXcd(d.cast<Cplx>().asDiagonal()));
  REQUIRE(log_det(a) == Catch::Approx(0.0).margin(1e-14));

  // rank-one PSD: singular, -inf sentinel
  Eigen::VectorXcd v(3);
  v << Cplx(1, 0), Cplx(0, 1), Cplx(1, 1);
  HermitianMatrix rank1(Eigen::MatrixXcd(v * v.adjoint()));
  REQUIRE(std::isinf(log_det(rank1)));
  REQUIRE(log_det(rank1) < 0);

  Eigen::MatrixXcd indef(2, 2);
  indef << Cplx(1, 0), Cplx(0, 0), Cplx(0, 0), Cplx(-1, 0);
  REQUIRE_THROWS_AS(log_det(HermitianMatrix(indef)), NotPSD);
}

TEST_CASE("inverse sqrt") {
  Eigen::VectorXd d(2);
  d << 4.0, 9.0;
  HermitianMatrix a(Eigen::MatrixXcd(d.cast<Cplx>().asDiagonal()));
  HermitianMatrix b = inverse_sqrt(a);
  REQUIRE(std::abs(b.entries()(0, 0) - Cplx(0.5, 0)) < 1e-14);
  REQUIRE(std::abs(b.entries()(1, 1) - Cplx(1.0 / 3.0, 0)) < 1e-14);

  Rng rng(991);
  for (int trial = 0; trial < 20; ++trial) {
    int m = 2 + int(rng.below(6));
    Eigen::MatrixXcd p = random_psd(m, rng);
    p += 0.05 * Eigen::MatrixXcd::Identity(m, m);  // keep condition moderate
    HermitianMatrix h(p);
    HermitianMatrix ih = inverse_sqrt(h);
    Eigen::MatrixXcd bab = ih.entries() * h.entries() * ih.entries();
    REQUIRE((bab - Eigen::MatrixXcd::Identity(m, m)).norm() <= 1e-8);
  }

  Eigen::VectorXcd v(2);
  v << Cplx(1, 0), Cplx(2, 0);
  HermitianMatrix singular(Eigen::MatrixXcd(v * v.adjoint()));
  try {
    inverse_sqrt(singular);
    FAIL("expected IllConditioned");
  } catch (const IllConditioned& err) {
    REQUIRE(err.smallest_eigenvalue < 1e-10);
  }
}

TEST_CASE("geometric mean of eigenvalues never beats the trace mean") {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    int m = 2 + int(rng.below(6));
    HermitianMatrix h{random_psd(m, rng)};
    EighResult e = hermitian_eigh(h);
    double det_root = 1.0;
    for (int k = 0; k < m; ++k)
      det_root *= std::pow(std::max(e.eigenvalues[k], 0.0), 1.0 / m);
    double trace_mean = h.entries().real().trace() / m;
    REQUIRE(det_root <= trace_mean + 1e-10);
  }
}

TEST_CASE("equidistant grid gramian is exactly the identity") {
  // I = {-4..3} on the circle, 8 equidistant points, weights 1/8
  int n = 8;
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXcd phi(n);
    for (int k = -4; k <= 3; ++k) {
      double ang = 2.0 * M_PI * k * (double(i) / n);
      phi(k + 4) = Cplx(std::cos(ang), std::sin(ang));
    }
    a += (1.0 / n) * phi * phi.adjoint();
  }
  REQUIRE(spectral_distance_to_identity(HermitianMatrix(a)) <= 1e-13);
}
