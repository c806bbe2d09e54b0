#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "mzforge/errors.hpp"
#include "mzforge/function_system.hpp"

namespace mzforge {

// Real spherical harmonics up to a fixed degree, orthonormal with respect to
// the normalized surface measure on the unit sphere in R^3. Points are given
// in ambient coordinates; evaluation normalizes, so the functions extend
// smoothly off the sphere (constant along rays), which keeps finite
// differences of the ambient Jacobian meaningful.
//
// The azimuthal factors Re/Im (x+iy)^m and the scaled Legendre functions
// H_l^m(z) = P_l^m(z) (1-z^2)^{-m/2} are polynomials, so evaluation is
// pole-free; the three-term recurrences are stable to degree ~50.
class SphereSystem : public FunctionSystem {
 public:
  explicit SphereSystem(int degree) : degree_(degree) {
    if (degree < 0) throw InvalidInput("SphereSystem: degree must be >= 0");
    int L = degree_;
    norm_.assign((L + 1) * (L + 1), 0.0);
    for (int l = 0; l <= L; ++l) {
      for (int m = 0; m <= l; ++m) {
        // ratio (l-m)!/(l+m)! accumulated as a product to avoid overflow
        double ratio = 1.0;
        for (int j = l - m + 1; j <= l + m; ++j) ratio /= j;
        double n2 = (2.0 * l + 1.0) * ratio * (m == 0 ? 1.0 : 2.0);
        norm_[l * (L + 1) + m] = std::sqrt(n2);
      }
    }
  }

  int degree() const { return degree_; }
  int dim() const override { return (degree_ + 1) * (degree_ + 1); }
  int domain_dim() const override { return 3; }
  Domain domain() const override { return Domain::SphereEmbedded; }
  bool orthonormal_basis() const override { return true; }
  bool constant_in_span() const override { return true; }

  // index of harmonic (l, m), m in [-l, l]
  static int flat_index(int l, int m) { return l * l + l + m; }

  // projects an ambient vector onto the tangent plane at unit vector u
  static Eigen::Vector3d tangent_project(const Eigen::Vector3d& u,
                                         const Eigen::Vector3d& g) {
    return g - u * u.dot(g);
  }

 protected:
  void eval_into(const Eigen::VectorXd& x, Eigen::VectorXcd& out) const override {
    Eigen::VectorXd vals;
    Eigen::MatrixXd grads;
    evaluate(x, vals, nullptr);
    out = vals.cast<Cplx>();
  }

  void jacobian_into(const Eigen::VectorXd& x, Eigen::MatrixXcd& out) const override {
    Eigen::VectorXd vals;
    Eigen::MatrixXd grads;
    evaluate(x, vals, &grads);
    out = grads.cast<Cplx>();
  }

 private:
  // vals: all harmonics at x/|x|; grads (optional): ambient gradient rows of
  // the ray-constant extension p(x/|x|).
  void evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& vals,
                Eigen::MatrixXd* grads) const {
    if (x.size() != 3) throw InvalidInput("SphereSystem: point must be in R^3");
    double r = x.norm();
    if (!(r > 0.0)) throw InvalidInput("SphereSystem: zero point");
    double ux = x[0] / r, uy = x[1] / r, uz = x[2] / r;

    int L = degree_;
    int n = dim();
    vals.resize(n);

    // H[l][m], dH[l][m] tables in z = uz
    std::vector<std::vector<double>> H(L + 1), dH(L + 1);
    for (int l = 0; l <= L; ++l) {
      H[l].assign(l + 1, 0.0);
      dH[l].assign(l + 1, 0.0);
    }
    H[0][0] = 1.0;
    for (int m = 1; m <= L; ++m) H[m][m] = (2.0 * m - 1.0) * H[m - 1][m - 1];
    for (int m = 0; m < L; ++m) {
      H[m + 1][m] = (2.0 * m + 1.0) * uz * H[m][m];
      dH[m + 1][m] = (2.0 * m + 1.0) * H[m][m];
    }
    for (int m = 0; m <= L; ++m)
      for (int l = m + 2; l <= L; ++l) {
        double a = 2.0 * l - 1.0, b = l + m - 1.0, c = l - m;
        H[l][m] = (a * uz * H[l - 1][m] - b * H[l - 2][m]) / c;
        dH[l][m] = (a * (H[l - 1][m] + uz * dH[l - 1][m]) - b * dH[l - 2][m]) / c;
      }

    // cs[m] + i sn[m] = (ux + i uy)^m
    std::vector<double> cs(L + 1), sn(L + 1);
    cs[0] = 1.0;
    sn[0] = 0.0;
    for (int m = 1; m <= L; ++m) {
      cs[m] = cs[m - 1] * ux - sn[m - 1] * uy;
      sn[m] = sn[m - 1] * ux + cs[m - 1] * uy;
    }

    if (grads) grads->resize(n, 3);
    for (int l = 0; l <= L; ++l) {
      for (int m = -l; m <= l; ++m) {
        int mm = std::abs(m);
        double N = norm_[l * (L + 1) + mm];
        double azim = (m >= 0) ? cs[mm] : sn[mm];
        int idx = flat_index(l, m);
        vals[idx] = N * H[l][mm] * azim;
        if (!grads) continue;
        // gradient in u of H_l^mm(uz) * azim(ux, uy)
        double gx, gy;
        if (mm == 0) {
          gx = gy = 0.0;
        } else if (m >= 0) {
          gx = N * H[l][mm] * mm * cs[mm - 1];
          gy = N * H[l][mm] * (-mm * sn[mm - 1]);
        } else {
          gx = N * H[l][mm] * mm * sn[mm - 1];
          gy = N * H[l][mm] * mm * cs[mm - 1];
        }
        double gz = N * dH[l][mm] * azim;
        Eigen::Vector3d g(gx, gy, gz);
        Eigen::Vector3d u(ux, uy, uz);
        Eigen::Vector3d amb = tangent_project(u, g) / r;
        grads->row(idx) = amb.transpose();
      }
    }
  }

  int degree_;
  std::vector<double> norm_;
};

}  // namespace mzforge
