#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <vector>

#include "mzforge/design.hpp"
#include "mzforge/errors.hpp"
#include "mzforge/function_system.hpp"
#include "mzforge/measure.hpp"
#include "mzforge/multi_index.hpp"
#include "mzforge/quadrature.hpp"
#include "mzforge/rng.hpp"
#include "mzforge/threading.hpp"

namespace mzforge {

// Spectral decomposition of a Mercer kernel k(x,y) = sum_j s_j^2 e_j(x)
// conj(e_j(y)) with {e_j} orthonormal in L2 and s_j nonincreasing. Functions
// of the induced Hilbert space are f = sum_j c_j s_j e_j with norm |c|_2.
class MercerSpectrum {
 public:
  virtual ~MercerSpectrum() = default;

  virtual Domain domain() const = 0;
  virtual int domain_dim() const = 0;
  virtual double sigma(int j) const = 0;  // 0-based, nonincreasing
  virtual Cplx eigenfunction(int j, const Eigen::VectorXd& x) const = 0;
  // gradient of eigenfunction j with respect to x, one entry per coordinate
  virtual Eigen::VectorXcd eigenfunction_gradient(
      int j, const Eigen::VectorXd& x) const = 0;
  // sum_{j >= n} sigma_j^2, absolute truncation error at most 1e-12
  virtual double tail_trace(int n) const = 0;
  // pointwise sum_{j >= n} sigma_j^2 |e_j(x)|^2
  virtual double tail_kernel_diagonal(int n,
                                      const Eigen::VectorXd& x) const = 0;
  // |e_j(x)| = 1 everywhere; makes the sampling density constant
  virtual bool unimodular() const { return false; }
  virtual Eigen::VectorXd coordinate_scales(int /*n*/) const {
    return Eigen::VectorXd::Ones(domain_dim());
  }
};

// Periodic Sobolev-type kernel on the torus: eigenfunctions are the complex
// exponentials ordered by max-norm shells (lexicographic within a shell) and
// s_k = (1 + |k|_inf)^{-s}. The enumeration within a shell is arbitrary for
// the kernel; the chosen order makes results reproducible.
class PeriodicSobolevSpectrum : public MercerSpectrum {
 public:
  PeriodicSobolevSpectrum(int d, double s) : d_(d), s_(s) {
    if (d < 1) throw InvalidInput("PeriodicSobolevSpectrum: need d >= 1");
    if (!(s > 0.5 * d))
      throw InvalidInput(
          "PeriodicSobolevSpectrum: need s > d/2 for a finite trace");
  }

  Domain domain() const override { return Domain::Torus; }
  int domain_dim() const override { return d_; }
  double smoothness() const { return s_; }

  double sigma(int j) const override {
    const Index& k = frequency(j);
    std::int64_t m = 0;
    for (auto v : k) m = std::max(m, std::abs(v));
    return std::pow(1.0 + static_cast<double>(m), -s_);
  }

  const Index& frequency(int j) const {
    if (j < 0) throw InvalidInput("PeriodicSobolevSpectrum: negative index");
    ensure_enumerated(j + 1);
    return freqs_[j];
  }

  Cplx eigenfunction(int j, const Eigen::VectorXd& x) const override {
    double frac = detail::torus_phase_fraction(frequency(j), x);
    return std::polar(1.0, kTwoPi * frac);
  }

  Eigen::VectorXcd eigenfunction_gradient(
      int j, const Eigen::VectorXd& x) const override {
    const Index& k = frequency(j);
    Cplx val = eigenfunction(j, x);
    Eigen::VectorXcd g(d_);
    for (int c = 0; c < d_; ++c)
      g(c) = Cplx(0.0, kTwoPi * static_cast<double>(k[c])) * val;
    return g;
  }

  double tail_trace(int n) const override {
    if (n < 0) throw InvalidInput("tail_trace: negative index");
    // cumulative count through shell t is (2t+1)^d
    auto shell_count = [&](std::int64_t t) {
      double full = std::pow(2.0 * t + 1.0, d_);
      double inner = t == 0 ? 0.0 : std::pow(2.0 * t - 1.0, d_);
      return full - inner;
    };
    std::int64_t t0 = 0;
    double cum = 0.0;
    while (cum + shell_count(t0) <= static_cast<double>(n)) {
      cum += shell_count(t0);
      ++t0;
    }
    double acc =
        (cum + shell_count(t0) - n) * std::pow(1.0 + t0, -2.0 * s_);
    for (std::int64_t t = t0 + 1;; ++t) {
      acc += shell_count(t) * std::pow(1.0 + t, -2.0 * s_);
      // remaining shells are bounded by C u^(d-1-2s) summed from t+1
      double tt = static_cast<double>(t + 1);
      double c = 2.0 * d_ * std::pow(3.0, d_ - 1);
      double rest = c * (std::pow(tt, d_ - 1 - 2.0 * s_) +
                         std::pow(tt, d_ - 2.0 * s_) / (2.0 * s_ - d_));
      if (rest <= 1e-12) break;
    }
    return acc;
  }

  double tail_kernel_diagonal(int n,
                              const Eigen::VectorXd&) const override {
    return tail_trace(n);  // unimodular eigenfunctions
  }

  bool unimodular() const override { return true; }

  Eigen::VectorXd coordinate_scales(int n) const override {
    ensure_enumerated(n);
    Eigen::VectorXd s(d_);
    for (int c = 0; c < d_; ++c) {
      std::int64_t m = 1;
      for (int j = 0; j < n; ++j) m = std::max(m, std::abs(freqs_[j][c]));
      s(c) = 1.0 / (kTwoPi * static_cast<double>(m));
    }
    return s;
  }

 private:
  void ensure_enumerated(int count) const {
    while (static_cast<int>(freqs_.size()) < count) {
      std::int64_t t = next_shell_++;
      std::vector<Index> shell;
      Index cur(d_, -t);
      while (true) {
        std::int64_t m = 0;
        for (auto v : cur) m = std::max(m, std::abs(v));
        if (m == t) shell.push_back(cur);
        int pos = d_ - 1;
        while (pos >= 0 && cur[pos] == t) {
          cur[pos] = -t;
          --pos;
        }
        if (pos < 0) break;
        ++cur[pos];
      }
      std::sort(shell.begin(), shell.end());
      freqs_.insert(freqs_.end(), shell.begin(), shell.end());
    }
  }

  int d_;
  double s_;
  mutable std::vector<Index> freqs_;
  mutable std::int64_t next_shell_ = 0;
};

// First n eigenfunctions divided by the square root of the sampling density
// w_n = 1/2 + (sum_{j>=n} s_j^2 |e_j|^2) / (2 sum_{j>=n} s_j^2). The density
// integrates to one and is bounded below by 1/2; for unimodular spectra it
// is identically one and the division is exact.
class DensityModifiedSystem : public FunctionSystem {
 public:
  DensityModifiedSystem(std::shared_ptr<const MercerSpectrum> spectrum, int n)
      : spectrum_(std::move(spectrum)), n_(n) {
    if (!spectrum_) throw InvalidInput("DensityModifiedSystem: null spectrum");
    if (n_ < 1) throw InvalidInput("DensityModifiedSystem: need n >= 1");
    tail_ = spectrum_->tail_trace(n_);
    if (!(tail_ > 0.0))
      throw ZeroTail(
          "DensityModifiedSystem: vanishing spectral tail, the sampling "
          "density is undefined");
  }

  int dim() const override { return n_; }
  int domain_dim() const override { return spectrum_->domain_dim(); }
  Domain domain() const override { return spectrum_->domain(); }
  bool orthonormal_basis() const override { return spectrum_->unimodular(); }
  bool constant_in_span() const override { return false; }
  Eigen::VectorXd coordinate_scales() const override {
    return spectrum_->coordinate_scales(n_);
  }

  const MercerSpectrum& spectrum() const { return *spectrum_; }
  double tail() const { return tail_; }

  double density(const Eigen::VectorXd& x) const {
    if (spectrum_->unimodular()) return 1.0;  // tail diagonal equals the tail
    return 0.5 + spectrum_->tail_kernel_diagonal(n_, x) / (2.0 * tail_);
  }

 protected:
  void eval_into(const Eigen::VectorXd& x,
                 Eigen::VectorXcd& out) const override {
    double root = std::sqrt(density(x));
    out.resize(n_);
    for (int j = 0; j < n_; ++j)
      out(j) = spectrum_->eigenfunction(j, x) / root;
  }

  void jacobian_into(const Eigen::VectorXd& x,
                     Eigen::MatrixXcd& out) const override {
    if (!spectrum_->unimodular())
      throw MzError(
          "DensityModifiedSystem: point gradients need a constant density; "
          "only unimodular spectra are supported for optimization");
    out.resize(n_, domain_dim());
    for (int j = 0; j < n_; ++j)
      out.row(j) = spectrum_->eigenfunction_gradient(j, x).transpose();
  }

 private:
  std::shared_ptr<const MercerSpectrum> spectrum_;
  int n_;
  double tail_ = 0.0;
};

// Weighted least-squares sampling recovery: samples at the design nodes are
// rescaled by the density and projected back onto the first n eigenfunctions
// through the orthonormal-column matrix A = D_lambda^{1/2} D_w^{-1/2} Psi.
struct RecoveryOperator {
  std::shared_ptr<const MercerSpectrum> spectrum;
  int n = 0;
  DiscreteMeasure nodes;     // points with probability weights lambda
  Eigen::VectorXd density;   // w_n at the nodes
  Eigen::MatrixXcd columns;  // A, N x n
  double column_residual = std::numeric_limits<double>::infinity();
  double mz_constant = std::numeric_limits<double>::infinity();
  bool truncation_tie = false;  // sigma_{n-1} == sigma_n in the ordering
};

inline constexpr double kRecoveryColumnTol = 1e-8;

inline RecoveryOperator build_recovery(
    std::shared_ptr<const MercerSpectrum> spectrum, int n,
    OptimizeConfig cfg = {}) {
  auto system = std::make_shared<DensityModifiedSystem>(spectrum, n);
  MzDesign des = build_exact_l2_mz(*system, cfg);
  if (!des.exact)
    throw NonExactDesign(
        "build_recovery: no exact design found for the modified system "
        "(best constant " +
        std::to_string(des.mz_constant) + ")");
  const int np = des.measure.size();
  if (np > n * n + 1)
    throw MzError("build_recovery: node count exceeds n^2+1");

  RecoveryOperator op;
  op.spectrum = std::move(spectrum);
  op.n = n;
  op.nodes = std::move(des.measure);
  op.mz_constant = des.mz_constant;
  op.density.resize(np);
  for (int i = 0; i < np; ++i) {
    op.density(i) = system->density(op.nodes.points.row(i).transpose());
    if (!(op.density(i) >= 0.5))
      throw MzError("build_recovery: sampling density fell below 1/2");
  }
  op.columns.resize(np, n);
  for (int i = 0; i < np; ++i) {
    Eigen::VectorXd x = op.nodes.points.row(i).transpose();
    double scale = std::sqrt(op.nodes.weights(i) / op.density(i));
    for (int j = 0; j < n; ++j)
      op.columns(i, j) = scale * op.spectrum->eigenfunction(j, x);
  }
  Eigen::MatrixXcd gram = op.columns.adjoint() * op.columns;
  op.column_residual =
      (gram - Eigen::MatrixXcd::Identity(n, n)).norm();
  if (!(op.column_residual <= kRecoveryColumnTol))
    throw NonExactDesign(
        "build_recovery: columns are not orthonormal to tolerance");
  op.truncation_tie = op.spectrum->sigma(n - 1) == op.spectrum->sigma(n);
  return op;
}

struct RecoveredFunction {
  std::shared_ptr<const MercerSpectrum> spectrum;
  Eigen::VectorXcd coefficients;  // expansion over the first n eigenfunctions

  Cplx evaluate(const Eigen::VectorXd& x) const {
    Cplx s = 0.0;
    for (int j = 0; j < coefficients.size(); ++j)
      s += coefficients(j) * spectrum->eigenfunction(j, x);
    return s;
  }
};

// c = Psi^* D_lambda D_w^{-1} f, one matrix-vector product.
inline RecoveredFunction apply_recovery(const RecoveryOperator& op,
                                        const Eigen::VectorXcd& samples) {
  if (samples.size() != op.nodes.size())
    throw InvalidInput("apply_recovery: sample count mismatch");
  Eigen::VectorXcd scaled(samples.size());
  for (int i = 0; i < samples.size(); ++i)
    scaled(i) = samples(i) *
                std::sqrt(op.nodes.weights(i) / op.density(i));
  RecoveredFunction out;
  out.spectrum = op.spectrum;
  out.coefficients = op.columns.adjoint() * scaled;
  return out;
}

struct RecoveryErrorReport {
  double max_ratio = 0.0;  // worst ||f - Sf||^2 / (3 tail_trace(n))
  double tail = 0.0;
  int trials = 0;
  int truncation_terms = 0;  // J, coefficient length of the test functions
  bool truncation_tie = false;
};

// Draws unit-ball coefficient vectors truncated at J terms, recovers each
// synthesized function from its node samples, and measures the squared L2
// error exactly in coefficient space against the bound 3 tail_trace(n).
inline RecoveryErrorReport recovery_error_bound_check(
    const RecoveryOperator& op, int trials, std::uint64_t seed,
    int truncation_terms = 0) {
  if (trials < 1)
    throw InvalidInput("recovery_error_bound_check: need at least one trial");
  const int n = op.n;
  const int big = truncation_terms > 0 ? truncation_terms : 50 * n;
  if (big < n)
    throw InvalidInput("recovery_error_bound_check: truncation below n");
  const int np = op.nodes.size();

  Eigen::MatrixXcd psi(np, big);
  Eigen::VectorXd sig(big);
  for (int j = 0; j < big; ++j) sig(j) = op.spectrum->sigma(j);
  for (int i = 0; i < np; ++i) {
    Eigen::VectorXd x = op.nodes.points.row(i).transpose();
    for (int j = 0; j < big; ++j)
      psi(i, j) = op.spectrum->eigenfunction(j, x);
  }

  RecoveryErrorReport report;
  report.tail = op.spectrum->tail_trace(n);
  report.trials = trials;
  report.truncation_terms = big;
  report.truncation_tie = op.truncation_tie;

  std::vector<double> ratios(trials, 0.0);
  parallel_for_index(trials, [&](int t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    Eigen::VectorXcd c(big);
    for (int j = 0; j < big; ++j) c(j) = Cplx(rng.normal(), rng.normal());
    c /= c.norm();
    Eigen::VectorXcd fcoef = sig.cast<Cplx>().cwiseProduct(c);
    Eigen::VectorXcd samples = psi * fcoef;
    RecoveredFunction rec = apply_recovery(op, samples);
    double err2 = 0.0;
    for (int j = 0; j < n; ++j) err2 += std::norm(rec.coefficients(j) - fcoef(j));
    for (int j = n; j < big; ++j) err2 += std::norm(fcoef(j));
    ratios[t] = err2 / (3.0 * report.tail);
  });
  for (double r : ratios) report.max_ratio = std::max(report.max_ratio, r);
  return report;
}

// Monte-Carlo orthonormality probe: worst deviation of an empirical Gram
// entry from the identity over the first `count` eigenfunctions.
inline double spectrum_orthonormality_mc(const MercerSpectrum& spectrum,
                                         int count, int samples,
                                         std::uint64_t seed) {
  if (count < 1 || samples < 1)
    throw InvalidInput("spectrum_orthonormality_mc: bad arguments");
  if (spectrum.domain() != Domain::Torus)
    throw InvalidInput(
        "spectrum_orthonormality_mc: only torus spectra supported");
  Rng rng(seed);
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(count, count);
  Eigen::VectorXd x(spectrum.domain_dim());
  Eigen::VectorXcd vals(count);
  for (int s = 0; s < samples; ++s) {
    for (int j = 0; j < x.size(); ++j) x(j) = rng.uniform();
    for (int j = 0; j < count; ++j) vals(j) = spectrum.eigenfunction(j, x);
    acc += vals * vals.adjoint();
  }
  acc /= static_cast<double>(samples);
  return (acc - Eigen::MatrixXcd::Identity(count, count))
      .cwiseAbs()
      .maxCoeff();
}

}  // namespace mzforge
