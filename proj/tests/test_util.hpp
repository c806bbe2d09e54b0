#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <utility>
#include <vector>

#include "mzforge/function_system.hpp"

namespace mztest {

// Golub-Welsch Gauss-Legendre rule on [-1, 1].
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_legendre(int n) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    double b = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  Eigen::VectorXd nodes = es.eigenvalues();
  Eigen::VectorXd weights(n);
  for (int k = 0; k < n; ++k) {
    double v = es.eigenvectors()(0, k);
    weights[k] = 2.0 * v * v;
  }
  return {nodes, weights};
}

// Small real system on the circle: span of sqrt(2) cos / sqrt(2) sin atoms
// selected by (frequency, is_sin) pairs; frequency 0 with is_sin=false is the
// constant function. Orthonormal on the torus.
class RealTrigSystem : public mzforge::FunctionSystem {
 public:
  explicit RealTrigSystem(std::vector<std::pair<int, bool>> terms)
      : terms_(std::move(terms)) {}

  int dim() const override { return static_cast<int>(terms_.size()); }
  int domain_dim() const override { return 1; }
  mzforge::Domain domain() const override { return mzforge::Domain::Torus; }
  bool orthonormal_basis() const override { return true; }
  bool constant_in_span() const override {
    for (auto& t : terms_)
      if (t.first == 0 && !t.second) return true;
    return false;
  }

 protected:
  void eval_into(const Eigen::VectorXd& x, Eigen::VectorXcd& out) const override {
    out.resize(dim());
    for (int k = 0; k < dim(); ++k) {
      auto [freq, is_sin] = terms_[k];
      double ang = mzforge::kTwoPi * freq * x[0];
      double amp = freq == 0 ? 1.0 : std::sqrt(2.0);
      out(k) = amp * (is_sin ? std::sin(ang) : std::cos(ang));
    }
  }

  void jacobian_into(const Eigen::VectorXd& x, Eigen::MatrixXcd& out) const override {
    out.resize(dim(), 1);
    for (int k = 0; k < dim(); ++k) {
      auto [freq, is_sin] = terms_[k];
      double ang = mzforge::kTwoPi * freq * x[0];
      double amp = (freq == 0 ? 1.0 : std::sqrt(2.0)) * mzforge::kTwoPi * freq;
      out(k, 0) = amp * (is_sin ? std::cos(ang) : -std::sin(ang));
    }
  }

 private:
  std::vector<std::pair<int, bool>> terms_;
};

}  // namespace mztest
