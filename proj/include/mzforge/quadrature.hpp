#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>

#include "mzforge/caratheodory.hpp"
#include "mzforge/design.hpp"
#include "mzforge/errors.hpp"
#include "mzforge/function_system.hpp"
#include "mzforge/measure.hpp"
#include "mzforge/multi_index.hpp"
#include "mzforge/rng.hpp"
#include "mzforge/sphere_harmonics.hpp"

namespace mzforge {

// Node budget for lifted systems; beyond this the construction is refused
// rather than silently attempted.
inline constexpr int kLiftDimensionCap = 2000;

struct MzDesign {
  DiscreteMeasure measure;  // probability weights on the final node set
  double mz_constant = std::numeric_limits<double>::infinity();
  double frobenius_residual = std::numeric_limits<double>::infinity();
  bool exact = false;
  double eps_target = 1e-13;
  int span_dimension = 0;  // real dimension of the Gram moment span
  long optimizer_iterations = 0;
  int restarts_used = 0;
  int restart_index = -1;
  std::uint64_t seed = 0;
};

namespace detail {

inline int default_point_count(const FunctionSystem& system) {
  if (const auto* trig = dynamic_cast<const TrigSystem*>(&system))
    return difference_set(trig->index_set()).size();
  // probe the span of the rank-one Gram contributions with a generous cloud
  const int n = system.dim();
  Rng rng(0x9e3779b97f4a7c15ull);
  Eigen::MatrixXd cloud(std::min(3 * n * n + 8, 4000), system.domain_dim());
  Eigen::VectorXd x;
  for (int i = 0; i < cloud.rows(); ++i) {
    sample_domain_point(system, rng, x);
    cloud.row(i) = x.transpose();
  }
  return atomize_gramian(system, cloud).span_dimension;
}

}  // namespace detail

// Builds a discrete probability measure whose weighted Gram matrix is the
// identity to eps_target, then prunes redundant nodes by Caratheodory
// reduction of the Gram moment vector. Pruning preserves the certified
// constant up to 1e-10. A failed search is reported through exact=false
// with the best measure found, never by loosening the certificate.
inline MzDesign build_exact_l2_mz(const FunctionSystem& system,
                                  OptimizeConfig cfg = {}) {
  if (cfg.n_points <= 0) cfg.n_points = detail::default_point_count(system);
  cfg.stop_at_first_success = true;

  DesignResult des = optimize_frobenius(system, cfg);
  MzDesign out;
  out.measure = des.measure;
  out.mz_constant = des.mz_constant;
  out.frobenius_residual = des.frobenius_residual;
  out.exact = des.exact;
  out.eps_target = cfg.eps_target;
  out.optimizer_iterations = des.iterations;
  out.restarts_used = des.restarts_used;
  out.restart_index = des.restart_index;
  out.seed = des.seed;

  GramianAtoms atoms = atomize_gramian(system, out.measure.points);
  out.span_dimension = atoms.span_dimension;
  if (!out.exact) return out;  // nothing worth pruning

  // Exact trig bookkeeping always carries the zero-frequency row, which pins
  // the total mass in conic mode even when the constant is not in the span.
  ReductionMode mode =
      (system.constant_in_span() || atoms.exact_bookkeeping)
          ? ReductionMode::Conic
          : ReductionMode::Convex;
  ReductionResult red =
      reduce_moment_vector(atoms.rows, out.measure.weights, mode, 1e-12);

  DiscreteMeasure pruned;
  pruned.points.resize(red.kept.size(), out.measure.points.cols());
  for (std::size_t s = 0; s < red.kept.size(); ++s)
    pruned.points.row(static_cast<int>(s)) =
        out.measure.points.row(red.kept[s]);
  pruned.weights = red.weights / red.weights.sum();
  pruned.mode = WeightMode::Probability;

  double pruned_mz = mz_constant(system, pruned);
  if (pruned_mz > out.mz_constant + 1e-10)
    throw MzError("l2 mz pruning degraded the certified constant");
  out.measure = std::move(pruned);
  out.mz_constant = pruned_mz;
  out.frobenius_residual = frobenius_objective(system, out.measure);
  out.exact = pruned_mz < cfg.eps_target;
  return out;
}

// Randomized check that the node set discretizes every inner product of the
// span: draws coefficient pairs (a, b), compares the weighted discrete inner
// product of f = sum_k a_k phi_k and g = sum_k b_k phi_k against the exact
// value, and returns the worst error normalized by |a| |b|. For an
// orthonormal system this never exceeds the design's certified constant.
inline double verify_inner_product_discretization(
    const FunctionSystem& system, const DiscreteMeasure& measure, int trials,
    std::uint64_t seed) {
  measure.validate();
  Eigen::MatrixXcd phi = evaluate_system_matrix(system, measure.points);
  const int n = system.dim();
  Rng rng(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXcd a(n), b(n);
    for (int k = 0; k < n; ++k) {
      a(k) = Cplx(rng.normal(), rng.normal());
      b(k) = Cplx(rng.normal(), rng.normal());
    }
    Eigen::VectorXcd fa = phi.transpose() * a;  // f(x_i)
    Eigen::VectorXcd fb = phi.transpose() * b;
    Cplx discrete = 0.0;
    for (int i = 0; i < measure.size(); ++i)
      discrete += measure.weights(i) * fa(i) * std::conj(fb(i));
    Cplx exact = b.dot(a);  // sum_k a_k conj(b_k)
    worst = std::max(worst,
                     std::abs(discrete - exact) / (a.norm() * b.norm()));
  }
  return worst;
}

// Positive quadrature exact on the span of the system (plus the constant).
// Step 1 builds an exact design for the span augmented with the constant,
// so every basis moment of the discrete measure matches the true integral.
// Step 2 runs a conic reduction on the per-node value vector
// [1, Re phi_1, Im phi_1, ...], so the node count never exceeds the real
// dimension of that value span (at most 2n+1) while all moments, including
// the total mass, are preserved.
struct QuadratureRule {
  DiscreteMeasure measure;
  double mz_constant = std::numeric_limits<double>::infinity();
  bool exact = false;
  double moment_deviation = std::numeric_limits<double>::infinity();
  int value_span_dimension = 0;
};

inline QuadratureRule build_tchakaloff(const FunctionSystem& system,
                                       OptimizeConfig cfg = {}) {
  const auto* trig = dynamic_cast<const TrigSystem*>(&system);
  std::shared_ptr<const FunctionSystem> augmented;
  if (trig && !trig->constant_in_span())
    augmented = std::make_shared<TrigSystem>(union_with_zero(trig->index_set()));
  else if (!system.constant_in_span())
    throw InvalidInput(
        "build_tchakaloff: the constant must lie in the span and no "
        "augmentation is available for this system type");

  MzDesign des = build_exact_l2_mz(augmented ? *augmented : system, cfg);

  QuadratureRule rule;
  rule.mz_constant = des.mz_constant;
  if (!des.exact) {
    rule.measure = des.measure;
    return rule;
  }

  const int np = des.measure.size();
  const int n = system.dim();
  Eigen::MatrixXcd phi = evaluate_system_matrix(system, des.measure.points);
  Eigen::MatrixXd atoms(np, 1 + 2 * n);
  atoms.col(0).setOnes();
  for (int j = 0; j < n; ++j) {
    atoms.col(1 + 2 * j) = phi.row(j).real().transpose();
    atoms.col(2 + 2 * j) = phi.row(j).imag().transpose();
  }
  ReductionResult red = reduce_moment_vector(atoms, des.measure.weights,
                                             ReductionMode::Conic, 1e-12);

  rule.measure.points.resize(red.kept.size(), des.measure.points.cols());
  for (std::size_t s = 0; s < red.kept.size(); ++s)
    rule.measure.points.row(static_cast<int>(s)) =
        des.measure.points.row(red.kept[s]);
  rule.measure.weights = red.weights / red.weights.sum();
  rule.measure.mode = WeightMode::Probability;
  rule.exact = true;
  rule.moment_deviation = red.moment_deviation;

  Eigen::BDCSVD<Eigen::MatrixXd> svd(atoms);
  const Eigen::VectorXd& sv = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-10 * std::max(1.0, sv(0))) ++rank;
  rule.value_span_dimension = rank;
  return rule;
}

// Integration error of the rule on random span functions against the exact
// moments carried by the reference measure (typically the unreduced design).
inline double quadrature_error_vs_reference(const FunctionSystem& system,
                                            const DiscreteMeasure& rule,
                                            const DiscreteMeasure& reference,
                                            int trials, std::uint64_t seed) {
  rule.validate();
  reference.validate();
  Eigen::MatrixXcd phi_rule = evaluate_system_matrix(system, rule.points);
  Eigen::MatrixXcd phi_ref = evaluate_system_matrix(system, reference.points);
  Eigen::VectorXcd mom_rule = phi_rule * rule.weights.cast<Cplx>();
  Eigen::VectorXcd mom_ref = phi_ref * reference.weights.cast<Cplx>();
  Rng rng(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXcd a(system.dim());
    for (int k = 0; k < a.size(); ++k)
      a(k) = Cplx(rng.normal(), rng.normal());
    a /= a.norm();
    worst = std::max(worst, std::abs(a.dot(mom_rule - mom_ref)));
  }
  return worst;
}

// Marcinkiewicz-Zygmund design for an even L^p norm: |f|^p = |f^{p/2}|^2, so
// an exact L^2 design for the lifted system (frequency sumset on the torus,
// degree p/2 times higher on the sphere) integrates |f|^p exactly over the
// original span.
struct LpMzDesign {
  DiscreteMeasure measure;
  int p = 2;
  double lifted_mz_constant = std::numeric_limits<double>::infinity();
  bool exact = false;
  int lifted_dim = 0;      // functions in the lifted system
  int span_dimension = 0;  // reduction budget of the lifted system
};

inline LpMzDesign build_lp_mz_even(const FunctionSystem& system, int p,
                                   OptimizeConfig cfg = {}) {
  if (p < 2 || p % 2 != 0)
    throw InvalidInput("build_lp_mz_even: p must be an even integer >= 2");
  const int half = p / 2;

  std::shared_ptr<const FunctionSystem> lifted;
  if (const auto* trig = dynamic_cast<const TrigSystem*>(&system)) {
    MultiIndexSet J = trig->index_set();
    for (int t = 1; t < half; ++t) {
      J = sumset(J, trig->index_set());
      if (J.size() > kLiftDimensionCap)
        throw SizeLimit("build_lp_mz_even: lifted frequency set exceeds " +
                        std::to_string(kLiftDimensionCap));
    }
    lifted = std::make_shared<TrigSystem>(std::move(J));
  } else if (const auto* sph = dynamic_cast<const SphereSystem*>(&system)) {
    int lifted_degree = sph->degree() * half;
    long lifted_dim =
        static_cast<long>(lifted_degree + 1) * (lifted_degree + 1);
    if (lifted_dim > kLiftDimensionCap)
      throw SizeLimit("build_lp_mz_even: lifted harmonic span exceeds " +
                      std::to_string(kLiftDimensionCap) + " functions");
    lifted = std::make_shared<SphereSystem>(lifted_degree);
  } else {
    throw InvalidInput("build_lp_mz_even: unsupported system type");
  }

  MzDesign inner = build_exact_l2_mz(*lifted, cfg);
  LpMzDesign out;
  out.measure = inner.measure;
  out.p = p;
  out.lifted_mz_constant = inner.mz_constant;
  out.exact = inner.exact;
  out.lifted_dim = lifted->dim();
  out.span_dimension = inner.span_dimension;
  return out;
}

// Exact value of the integral of |f|^p for f = sum_k a_k e^(2 pi i <k, x>),
// obtained by expanding f^{p/2} through repeated coefficient convolution
// over the integer frequency lattice and applying the Parseval identity.
inline double exact_lp_moment_trig(const MultiIndexSet& I,
                                   const Eigen::VectorXcd& coeffs, int p) {
  if (p < 2 || p % 2 != 0)
    throw InvalidInput("exact_lp_moment_trig: p must be an even integer >= 2");
  if (coeffs.size() != I.size())
    throw InvalidInput("exact_lp_moment_trig: coefficient count mismatch");
  std::map<Index, Cplx> poly;
  for (int k = 0; k < I.size(); ++k) poly[I.row(k)] += coeffs(k);
  for (int t = 1; t < p / 2; ++t) {
    std::map<Index, Cplx> next;
    for (const auto& [u, cu] : poly)
      for (int k = 0; k < I.size(); ++k) {
        Index v(I.dim());
        for (int j = 0; j < I.dim(); ++j) v[j] = u[j] + I.row(k)[j];
        next[v] += cu * coeffs(k);
      }
    poly = std::move(next);
  }
  double total = 0.0;
  for (const auto& [u, cu] : poly) total += std::norm(cu);
  return total;
}

// Worst absolute error of the rule on |f|^p across random unit-coefficient
// polynomials, measured against the exact convolution value.
inline double verify_lp_discretization(const TrigSystem& system,
                                       const DiscreteMeasure& measure, int p,
                                       int trials, std::uint64_t seed) {
  measure.validate();
  Eigen::MatrixXcd phi = evaluate_system_matrix(system, measure.points);
  Rng rng(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXcd a(system.dim());
    for (int k = 0; k < a.size(); ++k)
      a(k) = Cplx(rng.normal(), rng.normal());
    a /= a.norm();
    double exact = exact_lp_moment_trig(system.index_set(), a, p);
    Eigen::VectorXcd fvals = phi.transpose() * a;
    double discrete = 0.0;
    for (int i = 0; i < measure.size(); ++i)
      discrete += measure.weights(i) * std::pow(std::norm(fvals(i)), p / 2);
    worst = std::max(worst, std::abs(discrete - exact));
  }
  return worst;
}

}  // namespace mzforge
