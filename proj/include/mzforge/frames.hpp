#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "mzforge/design.hpp"
#include "mzforge/errors.hpp"
#include "mzforge/function_system.hpp"
#include "mzforge/linalg.hpp"
#include "mzforge/measure.hpp"
#include "mzforge/rng.hpp"

namespace mzforge {

// Discrete Parseval frame with equal-norm vectors, built from a determinant-
// maximizing design: psi_i = A^{-1/2} phi(x_i) with A the design's weighted
// Gram matrix. certified reports whether every certificate below held.
struct EntfResult {
  DesignResult design;            // the underlying optimization outcome
  DiscreteMeasure measure;        // retained atoms, weights renormalized
  Eigen::MatrixXcd frame_columns; // column i is psi(x_i)

  double parseval_error = std::numeric_limits<double>::quiet_NaN();
  double max_norm_error = std::numeric_limits<double>::quiet_NaN();
  double trace_error = std::numeric_limits<double>::quiet_NaN();
  double sup_frame_function = std::numeric_limits<double>::quiet_NaN();
  bool certified = false;
  std::string failure_reason;  // empty when certified
};

// Certificate tolerances. The norm and sup bounds depend on how tightly the
// weight iteration equalized the design; the trace identity and the Parseval
// property hold by construction up to roundoff.
inline constexpr double kEntfSupportCut = 1e-14;   // weights below are dust
inline constexpr double kEntfNormTol = 1e-6;       // | |psi_i|^2 - n |
inline constexpr double kEntfTraceTol = 1e-10;     // trace identity
inline constexpr double kEntfParsevalTol = 1e-10;  // spectral deviation
inline constexpr int kEntfSupSamples = 100000;

inline EntfResult build_entf(const FunctionSystem& system,
                             OptimizeConfig cfg) {
  cfg.weight_mode = WeightPolicy::Free;  // equalization needs free weights
  EntfResult out;
  out.design = optimize_logdet(system, cfg);

  // keep the genuine support; the eliminated atoms carry only dust
  const DiscreteMeasure& raw = out.design.measure;
  std::vector<int> keep;
  for (int i = 0; i < raw.size(); ++i)
    if (raw.weights(i) > kEntfSupportCut) keep.push_back(i);
  if (keep.empty()) {
    out.failure_reason = "design collapsed: no atoms above the support cut";
    return out;
  }
  out.measure.points.resize(keep.size(), raw.points.cols());
  out.measure.weights.resize(keep.size());
  for (size_t s = 0; s < keep.size(); ++s) {
    out.measure.points.row(s) = raw.points.row(keep[s]);
    out.measure.weights(s) = raw.weights(keep[s]);
  }
  out.measure.weights /= out.measure.weights.sum();
  out.measure.mode = WeightMode::Probability;

  const int n = system.dim();
  const int support = static_cast<int>(keep.size());
  Eigen::MatrixXcd phi = evaluate_system_matrix(system, out.measure.points);
  HermitianMatrix a(detail::gram_from_columns(phi, out.measure.weights));
  Eigen::MatrixXcd root;
  try {
    root = inverse_sqrt(a).entries();
  } catch (const IllConditioned& e) {
    out.failure_reason =
        "retained design is numerically singular (smallest eigenvalue " +
        std::to_string(e.smallest_eigenvalue) + ")";
    return out;
  }
  out.frame_columns = root * phi;

  Eigen::MatrixXcd frame_gram = detail::gram_from_columns(
      out.frame_columns, out.measure.weights);
  out.parseval_error =
      spectral_distance_to_identity(HermitianMatrix(frame_gram));

  out.max_norm_error = 0.0;
  double trace = 0.0;
  for (int i = 0; i < support; ++i) {
    double nrm = out.frame_columns.col(i).squaredNorm();
    out.max_norm_error = std::max(out.max_norm_error, std::abs(nrm - n));
    trace += out.measure.weights(i) * nrm;
  }
  out.trace_error = std::abs(trace - n);

  // the frame function ||A^{-1/2} phi(x)||^2 peaks at n when the design is
  // determinant-optimal; probe it across the whole domain
  Rng rng(derive_seed(cfg.seed, 0x5f7eb1d9u));
  Eigen::VectorXd x;
  Eigen::VectorXcd vals;
  out.sup_frame_function = 0.0;
  for (int t = 0; t < kEntfSupSamples; ++t) {
    detail::sample_domain_point(system, rng, x);
    system.eval(x, vals);
    out.sup_frame_function =
        std::max(out.sup_frame_function, (root * vals).squaredNorm());
  }

  if (out.parseval_error > kEntfParsevalTol)
    out.failure_reason = "parseval deviation above tolerance";
  else if (out.max_norm_error > kEntfNormTol)
    out.failure_reason = "frame vector norms not equalized";
  else if (out.trace_error > kEntfTraceTol)
    out.failure_reason = "trace identity violated";
  else if (out.sup_frame_function > n + kEntfNormTol)
    out.failure_reason = "frame function exceeds its optimal level";
  else
    out.certified = true;
  return out;
}

// Randomized quadratic-form check: for unit vectors a the deviation
// |a^* (sum_i w_i psi_i psi_i^*) a - 1| never exceeds the spectral Parseval
// error. Returns the largest deviation seen.
inline double verify_parseval(const Eigen::MatrixXcd& frame_columns,
                              const Eigen::VectorXd& weights, int trials,
                              std::uint64_t seed) {
  if (frame_columns.cols() != weights.size())
    throw InvalidInput("verify_parseval: columns/weights mismatch");
  Eigen::MatrixXcd a = detail::gram_from_columns(frame_columns, weights);
  Rng rng(seed);
  const int n = static_cast<int>(frame_columns.rows());
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXcd v(n);
    for (int j = 0; j < n; ++j) v(j) = Cplx(rng.normal(), rng.normal());
    v /= v.norm();
    double dev = std::abs((v.adjoint() * a * v)(0, 0).real() - 1.0);
    worst = std::max(worst, dev);
  }
  return worst;
}

}  // namespace mzforge
