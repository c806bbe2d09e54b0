#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <memory>

#include "mzforge/errors.hpp"
#include "mzforge/linalg.hpp"
#include "mzforge/multi_index.hpp"

namespace mzforge {

enum class Domain { Torus, SphereEmbedded };

// A finite system of functions on a domain, evaluated at points given in the
// domain's storage coordinates (torus: d reals, sphere: ambient R^3).
class FunctionSystem {
 public:
  virtual ~FunctionSystem() = default;

  virtual int dim() const = 0;         // number of functions n
  virtual int domain_dim() const = 0;  // point storage dimension
  virtual Domain domain() const = 0;

  virtual bool has_jacobian() const { return true; }
  // true when the continuous Gram matrix of the system is exactly the
  // identity for the system's reference measure
  virtual bool orthonormal_basis() const { return false; }
  virtual bool constant_in_span() const = 0;

  // Characteristic length per point coordinate: moving a point by this much
  // changes function values by O(1). Optimizers use it as a preconditioner.
  virtual Eigen::VectorXd coordinate_scales() const {
    return Eigen::VectorXd::Ones(domain_dim());
  }

  void eval(const Eigen::VectorXd& x, Eigen::VectorXcd& out) const {
    eval_into(x, out);
  }
  // out(k, j) = d phi_k / d x_j
  void jacobian(const Eigen::VectorXd& x, Eigen::MatrixXcd& out) const {
    jacobian_into(x, out);
  }

  Eigen::VectorXcd eval(const Eigen::VectorXd& x) const {
    Eigen::VectorXcd out;
    eval_into(x, out);
    return out;
  }
  Eigen::MatrixXcd jacobian(const Eigen::VectorXd& x) const {
    Eigen::MatrixXcd out;
    jacobian_into(x, out);
    return out;
  }

 protected:
  virtual void eval_into(const Eigen::VectorXd& x,
                         Eigen::VectorXcd& out) const = 0;
  virtual void jacobian_into(const Eigen::VectorXd& x,
                             Eigen::MatrixXcd& out) const = 0;
};

namespace detail {

// frac(<k, x>) accumulated so that no precision is lost on huge frequencies:
// each product k_j * x_j is split exactly with an FMA, integer parts are
// dropped exactly, and the remainders are summed with compensation.
inline double torus_phase_fraction(const std::vector<std::int64_t>& k,
                                   const Eigen::VectorXd& x) {
  double acc = 0.0, comp = 0.0;
  auto add = [&](double v) {
    double y = v - comp;
    double t = acc + y;
    comp = (t - acc) - y;
    acc = t;
  };
  for (int j = 0; j < x.size(); ++j) {
    double kd = static_cast<double>(k[j]);
    double p = kd * x[j];
    double e = std::fma(kd, x[j], -p);
    add(p - std::floor(p));
    add(e);
  }
  double s = acc + comp;
  s -= std::floor(s);
  if (s >= 1.0) s -= 1.0;
  if (s < 0.0) s += 1.0;
  return s;
}

}  // namespace detail

constexpr double kTwoPi = 6.283185307179586476925286766559;

// phi_k(x) = exp(2 pi i <k, x>) for k in a fixed index set.
class TrigSystem : public FunctionSystem {
 public:
  explicit TrigSystem(MultiIndexSet I) : I_(std::move(I)) {}

  int dim() const override { return I_.size(); }
  int domain_dim() const override { return I_.dim(); }
  Domain domain() const override { return Domain::Torus; }
  bool orthonormal_basis() const override { return true; }
  bool constant_in_span() const override { return I_.contains_zero(); }

  const MultiIndexSet& index_set() const { return I_; }

  Eigen::VectorXd coordinate_scales() const override {
    Eigen::VectorXd s(I_.dim());
    for (int j = 0; j < I_.dim(); ++j)
      s(j) = 1.0 / (kTwoPi * static_cast<double>(std::max<std::int64_t>(
                                 1, I_.max_abs(j))));
    return s;
  }

 protected:
  void eval_into(const Eigen::VectorXd& x, Eigen::VectorXcd& out) const override {
    if (x.size() != I_.dim()) throw InvalidInput("TrigSystem: point dimension");
    out.resize(I_.size());
    for (int k = 0; k < I_.size(); ++k) {
      double ang = kTwoPi * detail::torus_phase_fraction(I_.row(k), x);
      out(k) = Cplx(std::cos(ang), std::sin(ang));
    }
  }

  void jacobian_into(const Eigen::VectorXd& x, Eigen::MatrixXcd& out) const override {
    Eigen::VectorXcd vals = eval(x);
    out.resize(I_.size(), I_.dim());
    for (int k = 0; k < I_.size(); ++k)
      for (int j = 0; j < I_.dim(); ++j)
        out(k, j) = Cplx(0.0, kTwoPi * static_cast<double>(I_.row(k)[j])) * vals(k);
  }

 private:
  MultiIndexSet I_;
};

// Rescales a base system by the inverse square root of its normalized
// pointwise norm eta(x) = sum_k |phi_k(x)|^2 / m, augmenting with the
// constant function first when the span lacks it. The rescaled system
// satisfies sum_k |psi_k(x)|^2 = m identically.
class ChristoffelRescaledSystem : public FunctionSystem {
 public:
  explicit ChristoffelRescaledSystem(std::shared_ptr<const FunctionSystem> base)
      : base_(std::move(base)), augmented_(!base_->constant_in_span()) {}

  int dim() const override { return base_->dim() + (augmented_ ? 1 : 0); }
  int domain_dim() const override { return base_->domain_dim(); }
  Domain domain() const override { return base_->domain(); }
  bool constant_in_span() const override { return false; }
  bool augmented() const { return augmented_; }
  const FunctionSystem& base() const { return *base_; }

  Eigen::VectorXd coordinate_scales() const override {
    return base_->coordinate_scales();
  }

  double eta(const Eigen::VectorXd& x) const {
    Eigen::VectorXcd w;
    raw_eval(x, w);
    return w.squaredNorm() / dim();
  }

 protected:
  void eval_into(const Eigen::VectorXd& x, Eigen::VectorXcd& out) const override {
    raw_eval(x, out);
    double e = out.squaredNorm() / dim();
    if (!(e > 1e-300))
      throw DegenerateChristoffel("christoffel rescale: eta vanishes at point");
    out /= std::sqrt(e);
  }

  void jacobian_into(const Eigen::VectorXd& x, Eigen::MatrixXcd& out) const override {
    int m = dim();
    Eigen::VectorXcd w;
    raw_eval(x, w);
    Eigen::MatrixXcd jw(m, domain_dim());
    jw.topRows(base_->dim()) = base_->jacobian(x);
    if (augmented_) jw.row(m - 1).setZero();
    double e = w.squaredNorm() / m;
    if (!(e > 1e-300))
      throw DegenerateChristoffel("christoffel rescale: eta vanishes at point");
    // d eta / d x_j = (2/m) sum_k Re(conj(w_k) dw_k/dx_j)
    Eigen::VectorXd de(domain_dim());
    for (int j = 0; j < domain_dim(); ++j)
      de(j) = 2.0 / m * (w.conjugate().cwiseProduct(jw.col(j))).real().sum();
    double inv_sqrt_e = 1.0 / std::sqrt(e);
    out.resize(m, domain_dim());
    for (int j = 0; j < domain_dim(); ++j)
      out.col(j) = jw.col(j) * inv_sqrt_e - w * (0.5 * de(j) * inv_sqrt_e / e);
  }

 private:
  void raw_eval(const Eigen::VectorXd& x, Eigen::VectorXcd& out) const {
    base_->eval(x, out);
    if (augmented_) {
      out.conservativeResize(base_->dim() + 1);
      out(base_->dim()) = Cplx(1.0, 0.0);
    }
  }

  std::shared_ptr<const FunctionSystem> base_;
  bool augmented_;
};

inline std::shared_ptr<ChristoffelRescaledSystem> christoffel_rescale(
    std::shared_ptr<const FunctionSystem> base) {
  return std::make_shared<ChristoffelRescaledSystem>(std::move(base));
}

}  // namespace mzforge
