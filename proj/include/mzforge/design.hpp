#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "mzforge/errors.hpp"
#include "mzforge/function_system.hpp"
#include "mzforge/linalg.hpp"
#include "mzforge/measure.hpp"
#include "mzforge/rng.hpp"
#include "mzforge/threading.hpp"

namespace mzforge {

// Column k holds phi(x_k) for row k of points.
inline Eigen::MatrixXcd evaluate_system_matrix(const FunctionSystem& system,
                                               const Eigen::MatrixXd& points) {
  Eigen::MatrixXcd phi(system.dim(), points.rows());
  Eigen::VectorXcd col;
  for (int i = 0; i < points.rows(); ++i) {
    system.eval(points.row(i).transpose(), col);
    phi.col(i) = col;
  }
  return phi;
}

namespace detail {

inline Eigen::MatrixXcd gram_from_columns(const Eigen::MatrixXcd& phi,
                                          const Eigen::VectorXd& weights) {
  Eigen::MatrixXcd wphi = phi;
  for (int i = 0; i < weights.size(); ++i) wphi.col(i) *= weights[i];
  Eigen::MatrixXcd a = wphi * phi.adjoint();
  return 0.5 * (a + a.adjoint());
}

// log det from a Cholesky factor, -inf when the matrix is singular or so
// close to it that the factorization is dominated by roundoff (a pivot ratio
// of 1e-7 corresponds to a condition number of about 1e14).
inline double logdet_from_llt(const Eigen::LLT<Eigen::MatrixXcd>& llt) {
  if (llt.info() != Eigen::Success)
    return -std::numeric_limits<double>::infinity();
  Eigen::VectorXd d = llt.matrixLLT().diagonal().real();
  double dmax = d.maxCoeff();
  double dmin = d.minCoeff();
  if (!(dmin > 0.0) || dmin <= 1e-7 * dmax)
    return -std::numeric_limits<double>::infinity();
  double ld = 0.0;
  for (int k = 0; k < d.size(); ++k) ld += 2.0 * std::log(d(k));
  return ld;
}

}  // namespace detail

inline HermitianMatrix gramian(const FunctionSystem& system,
                               const DiscreteMeasure& measure) {
  measure.validate();
  if (measure.points.cols() != system.domain_dim())
    throw InvalidInput("gramian: point dimension does not match system");
  Eigen::MatrixXcd phi = evaluate_system_matrix(system, measure.points);
  return HermitianMatrix(detail::gram_from_columns(phi, measure.weights));
}

// max_k |lambda_k(A) - 1| for the weighted Gram matrix A of the measure.
inline double mz_constant(const FunctionSystem& system,
                          const DiscreteMeasure& measure) {
  return spectral_distance_to_identity(
      hermitian_eigh(gramian(system, measure)).eigenvalues);
}

inline double frobenius_objective(const FunctionSystem& system,
                                  const DiscreteMeasure& measure) {
  Eigen::MatrixXcd a = gramian(system, measure).entries();
  a.diagonal().array() -= 1.0;
  return a.squaredNorm();
}

struct DesignGradient {
  double value = 0.0;                // objective at the measure
  Eigen::MatrixXd point_gradient;    // N x domain_dim
  Eigen::VectorXd weight_gradient;   // N
};

// Gradient of ||A - I||_F^2 in all point coordinates and weights. The
// residual R = A - I is formed once and shared across every partial.
inline DesignGradient frobenius_gradient(const FunctionSystem& system,
                                         const DiscreteMeasure& measure) {
  measure.validate();
  if (measure.points.cols() != system.domain_dim())
    throw InvalidInput("frobenius_gradient: point dimension mismatch");
  const int np = static_cast<int>(measure.points.rows());
  const int dd = system.domain_dim();
  Eigen::MatrixXcd phi = evaluate_system_matrix(system, measure.points);
  Eigen::MatrixXcd r = detail::gram_from_columns(phi, measure.weights);
  r.diagonal().array() -= 1.0;

  DesignGradient g;
  g.value = r.squaredNorm();
  g.point_gradient.resize(np, dd);
  g.weight_gradient.resize(np);
  Eigen::MatrixXcd jac;
  for (int i = 0; i < np; ++i) {
    Eigen::VectorXcd v = r * phi.col(i);  // R phi_i, reused by both partials
    g.weight_gradient(i) = 2.0 * phi.col(i).dot(v).real();
    system.jacobian(measure.points.row(i).transpose(), jac);
    g.point_gradient.row(i) =
        4.0 * measure.weights[i] * (jac.adjoint() * v).real().transpose();
  }
  return g;
}

// log det A with its gradient. A singular (or non-positive) Gram matrix
// yields -inf with zero gradients so callers can treat it as a barrier.
inline DesignGradient logdet_objective_and_gradient(
    const FunctionSystem& system, const DiscreteMeasure& measure) {
  measure.validate();
  if (measure.points.cols() != system.domain_dim())
    throw InvalidInput("logdet gradient: point dimension mismatch");
  const int np = static_cast<int>(measure.points.rows());
  const int dd = system.domain_dim();
  Eigen::MatrixXcd phi = evaluate_system_matrix(system, measure.points);
  Eigen::MatrixXcd a = detail::gram_from_columns(phi, measure.weights);

  DesignGradient g;
  g.point_gradient = Eigen::MatrixXd::Zero(np, dd);
  g.weight_gradient = Eigen::VectorXd::Zero(np);

  Eigen::LLT<Eigen::MatrixXcd> llt(a);
  double ld = detail::logdet_from_llt(llt);
  if (!std::isfinite(ld)) {
    g.value = -std::numeric_limits<double>::infinity();
    return g;
  }
  g.value = ld;
  Eigen::MatrixXcd ainv_phi = llt.solve(phi);
  Eigen::MatrixXcd jac;
  for (int i = 0; i < np; ++i) {
    g.weight_gradient(i) = phi.col(i).dot(ainv_phi.col(i)).real();
    system.jacobian(measure.points.row(i).transpose(), jac);
    g.point_gradient.row(i) = 2.0 * measure.weights[i] *
                              (jac.adjoint() * ainv_phi.col(i)).real().transpose();
  }
  return g;
}

enum class WeightPolicy { Equal, Free };

struct OptimizeConfig {
  int n_points = 0;
  int max_restarts = 10;
  long max_iters = 20000;  // per-restart budget of accepted descent steps
  std::uint64_t seed = 1;
  WeightPolicy weight_mode = WeightPolicy::Free;
  double eps_target = 1e-13;
  bool stop_at_first_success = false;
  std::optional<DiscreteMeasure> initial_measure;  // seeds restart 0
};

struct DesignResult {
  DiscreteMeasure measure;
  double mz_constant = std::numeric_limits<double>::infinity();
  // squared Frobenius distance of the Gram matrix to the identity
  double frobenius_residual = std::numeric_limits<double>::infinity();
  double log_det = -std::numeric_limits<double>::infinity();
  bool exact = false;
  long iterations = 0;   // descent steps consumed by the winning restart
  int restarts_used = 0;
  int restart_index = -1;
  std::uint64_t seed = 0;
  std::vector<double> objective_trace;  // winning restart, one entry per phase
};

namespace detail {

struct BfgsOutcome {
  double f = std::numeric_limits<double>::quiet_NaN();
  long iterations = 0;
  bool hit_floor = false;
  bool diverged = false;  // non-finite objective at the incumbent
};

// Dense inverse-Hessian BFGS with Armijo backtracking. FOnly evaluates the
// objective, FGrad fills the gradient and returns the objective.
template <class FOnly, class FGrad>
BfgsOutcome bfgs_minimize(Eigen::VectorXd& x, FOnly&& f_only, FGrad&& f_grad,
                          long max_iters, double f_floor) {
  const int n = static_cast<int>(x.size());
  BfgsOutcome out;
  Eigen::VectorXd g(n);
  double f = f_grad(x, g);
  out.f = f;
  if (!std::isfinite(f) || !g.allFinite()) {
    out.diverged = true;
    return out;
  }
  if (f <= f_floor) {
    out.hit_floor = true;
    return out;
  }
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
  bool scaled = false;
  Eigen::VectorXd x_new(n), g_new(n), s(n), y(n), hy(n), p(n);
  for (long it = 0; it < max_iters; ++it) {
    p.noalias() = -(h.selfadjointView<Eigen::Lower>() * g);
    double slope = g.dot(p);
    if (!(slope < 0.0)) {
      h.setIdentity();
      scaled = false;
      p = -g;
      slope = g.dot(p);
      if (!(slope < 0.0)) break;  // gradient numerically zero
    }
    double alpha = 1.0;
    bool accepted = false;
    double f_new = 0.0;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + alpha * p;
      f_new = f_only(x_new);
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
    f_new = f_grad(x_new, g_new);
    if (!std::isfinite(f_new) || !g_new.allFinite()) {
      out.diverged = true;
      break;
    }
    s = x_new - x;
    y = g_new - g;
    double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        h *= sy / y.squaredNorm();
        scaled = true;
      }
      hy.noalias() = h.selfadjointView<Eigen::Lower>() * y;
      double rho = 1.0 / sy;
      h.selfadjointView<Eigen::Lower>().rankUpdate(
          s, (1.0 + rho * y.dot(hy)) * rho);
      h.selfadjointView<Eigen::Lower>().rankUpdate(s, hy, -rho);
    }
    x.swap(x_new);
    g.swap(g_new);
    f = f_new;
    ++out.iterations;
    out.f = f;
    if (f <= f_floor) {
      out.hit_floor = true;
      break;
    }
  }
  return out;
}

struct RestartRecord {
  Eigen::MatrixXd points;
  Eigen::VectorXd weights;
  double objective = std::numeric_limits<double>::infinity();
  double mz = std::numeric_limits<double>::infinity();
  double log_det = -std::numeric_limits<double>::infinity();
  bool success = false;
  bool abandoned = false;
  long iterations = 0;
  std::vector<double> trace;
};

inline void sample_domain_point(const FunctionSystem& system, Rng& rng,
                                Eigen::VectorXd& x) {
  x.resize(system.domain_dim());
  if (system.domain() == Domain::Torus) {
    for (int j = 0; j < x.size(); ++j) x(j) = rng.uniform();
  } else {
    double r = 0.0;
    do {
      for (int j = 0; j < x.size(); ++j) x(j) = rng.normal();
      r = x.norm();
    } while (r < 1e-8);
    x /= r;
  }
}

inline void random_points(const FunctionSystem& system, Rng& rng,
                          Eigen::MatrixXd& x) {
  Eigen::VectorXd row;
  for (int i = 0; i < x.rows(); ++i) {
    sample_domain_point(system, rng, row);
    x.row(i) = row.transpose();
  }
}

inline void seed_restart(const FunctionSystem& system,
                         const OptimizeConfig& cfg, int restart, Rng& rng,
                         Eigen::MatrixXd& x, Eigen::VectorXd& w) {
  const int np = cfg.n_points;
  x.resize(np, system.domain_dim());
  if (restart == 0 && cfg.initial_measure) {
    const DiscreteMeasure& init = *cfg.initial_measure;
    if (init.points.rows() != np ||
        init.points.cols() != system.domain_dim() ||
        init.weights.size() != np)
      throw InvalidInput("optimize: initial measure shape mismatch");
    x = init.points;
    double s = init.weights.sum();
    if (!(s > 0.0)) throw InvalidInput("optimize: initial weights sum to 0");
    w = init.weights / s;
    return;
  }
  random_points(system, rng, x);
  w = Eigen::VectorXd::Constant(np, 1.0 / np);
}

// Driver shared by both objectives: deterministic batched restarts, results
// keyed by restart index so worker count never changes the outcome.
template <class RunRestart, class Better>
DesignResult run_restarts(const OptimizeConfig& cfg, RunRestart&& run,
                          Better&& better) {
  if (cfg.n_points <= 0) throw InvalidInput("optimize: n_points must be > 0");
  if (cfg.max_restarts <= 0)
    throw InvalidInput("optimize: max_restarts must be > 0");
  std::vector<RestartRecord> slots(cfg.max_restarts);
  std::vector<char> done(cfg.max_restarts, 0);
  int executed = 0;
  bool stop = false;
  while (executed < cfg.max_restarts && !stop) {
    int batch = std::min<int>(worker_count(),
                              cfg.max_restarts - executed);
    int base = executed;
    parallel_for_index(batch, [&](int b) {
      slots[base + b] = run(base + b);
      done[base + b] = 1;
    });
    executed += batch;
    if (cfg.stop_at_first_success)
      for (int i = 0; i < executed; ++i)
        if (slots[i].success) stop = true;
  }

  int best = -1;
  for (int i = 0; i < executed; ++i) {
    if (!done[i] || slots[i].abandoned) continue;
    if (cfg.stop_at_first_success && slots[i].success) {
      best = i;
      break;
    }
    if (best < 0 || better(slots[i], slots[best])) best = i;
  }
  if (best < 0) throw MzError("optimize: every restart diverged");

  const RestartRecord& rec = slots[best];
  DesignResult result;
  result.measure.points = rec.points;
  result.measure.weights = rec.weights;
  result.measure.mode = WeightMode::Probability;
  result.mz_constant = rec.mz;
  result.frobenius_residual = rec.objective;
  result.log_det = rec.log_det;
  result.exact = rec.success;
  result.iterations = rec.iterations;
  result.restarts_used =
      cfg.stop_at_first_success && rec.success ? best + 1 : executed;
  result.restart_index = best;
  result.seed = cfg.seed;
  result.objective_trace = rec.trace;
  return result;
}

}  // namespace detail

// Minimizes ||A(measure) - I||_F^2 by alternating BFGS blocks over points and
// weights (30 accepted steps each), with weights clamped to the simplex after
// every weight block and a final points-only polish. Success means the
// spectral deviation of the final Gram matrix is below eps_target.
inline DesignResult optimize_frobenius(const FunctionSystem& system,
                                       const OptimizeConfig& cfg) {
  const int np = cfg.n_points;
  const int dd = system.domain_dim();
  const Eigen::VectorXd scales = system.coordinate_scales();
  const double f_floor = 0.25 * cfg.eps_target * cfg.eps_target;
  const int block_iters = 30;

  auto run_one = [&](int restart) -> detail::RestartRecord {
    detail::RestartRecord rec;
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(restart)));
    Eigen::MatrixXd x;
    Eigen::VectorXd w;
    detail::seed_restart(system, cfg, restart, rng, x, w);

    DiscreteMeasure scratch;
    scratch.mode = WeightMode::Conic;  // skip simplex checks mid-flight
    auto objective = [&](const Eigen::MatrixXd& pts,
                         const Eigen::VectorXd& wts) {
      Eigen::MatrixXcd a = detail::gram_from_columns(
          evaluate_system_matrix(system, pts), wts);
      a.diagonal().array() -= 1.0;
      return a.squaredNorm();
    };

    // point block parametrized as x = scale .* u, flattened row-major
    auto unpack = [&](const Eigen::VectorXd& u, Eigen::MatrixXd& pts) {
      for (int i = 0; i < np; ++i)
        for (int j = 0; j < dd; ++j) pts(i, j) = scales(j) * u(i * dd + j);
    };
    Eigen::MatrixXd pts_buf(np, dd);
    auto point_f = [&](const Eigen::VectorXd& u) {
      unpack(u, pts_buf);
      return objective(pts_buf, w);
    };
    auto point_fg = [&](const Eigen::VectorXd& u, Eigen::VectorXd& g) {
      unpack(u, pts_buf);
      scratch.points = pts_buf;
      scratch.weights = w;
      DesignGradient dg = frobenius_gradient(system, scratch);
      g.resize(np * dd);
      for (int i = 0; i < np; ++i)
        for (int j = 0; j < dd; ++j)
          g(i * dd + j) = scales(j) * dg.point_gradient(i, j);
      return dg.value;
    };

    // weight block: system matrix is frozen, reuse it across evaluations
    Eigen::MatrixXcd phi_cache;
    auto weight_f = [&](const Eigen::VectorXd& wts) {
      Eigen::MatrixXcd a = detail::gram_from_columns(phi_cache, wts);
      a.diagonal().array() -= 1.0;
      return a.squaredNorm();
    };
    auto weight_fg = [&](const Eigen::VectorXd& wts, Eigen::VectorXd& g) {
      Eigen::MatrixXcd r = detail::gram_from_columns(phi_cache, wts);
      r.diagonal().array() -= 1.0;
      g.resize(np);
      for (int i = 0; i < np; ++i)
        g(i) = 2.0 * phi_cache.col(i).dot(r * phi_cache.col(i)).real();
      return r.squaredNorm();
    };

    double f = objective(x, w);
    if (!std::isfinite(f)) {
      rec.abandoned = true;
      return rec;
    }
    rec.trace.push_back(f);

    Eigen::VectorXd u(np * dd);
    auto pack = [&]() {
      for (int i = 0; i < np; ++i)
        for (int j = 0; j < dd; ++j) u(i * dd + j) = x(i, j) / scales(j);
    };

    auto run_point_block = [&](long iters) -> bool {
      pack();
      detail::BfgsOutcome o =
          detail::bfgs_minimize(u, point_f, point_fg, iters, f_floor);
      if (o.diverged) return false;
      unpack(u, x);
      if (system.domain() == Domain::SphereEmbedded)
        canonicalize_points(Domain::SphereEmbedded, x);
      f = objective(x, w);
      rec.iterations += o.iterations;
      return std::isfinite(f);
    };

    // with weights frozen there is nothing to alternate with, so let the
    // point phase keep its curvature model instead of resetting every block
    const long point_iters =
        cfg.weight_mode == WeightPolicy::Free ? block_iters : 2000;

    bool alive = true;
    long max_rounds = cfg.max_iters;  // each productive round costs >= 1 step
    for (long round = 0; round < max_rounds && alive; ++round) {
      double f_before = f;
      alive = run_point_block(std::min(
          point_iters, std::max<long>(1, cfg.max_iters - rec.iterations)));
      if (!alive) break;
      rec.trace.push_back(f);
      if (f <= f_floor) break;

      if (cfg.weight_mode == WeightPolicy::Free) {
        phi_cache = evaluate_system_matrix(system, x);
        detail::BfgsOutcome o =
            detail::bfgs_minimize(w, weight_f, weight_fg, block_iters, f_floor);
        if (o.diverged) {
          alive = false;
          break;
        }
        rec.iterations += o.iterations;
        w = w.cwiseMax(0.0);
        double sw = w.sum();
        if (!(sw > 0.0)) {
          alive = false;
          break;
        }
        w /= sw;
        f = objective(x, w);
        if (!std::isfinite(f)) {
          alive = false;
          break;
        }
        rec.trace.push_back(f);
        if (f <= f_floor) break;
      }
      if (rec.iterations >= cfg.max_iters) break;
      double rel = (f_before - f) / std::max(f_before, 1e-300);
      if (rel <= 1e-16) break;
    }
    if (alive && f > f_floor) {
      // final polish with weights frozen
      alive = run_point_block(point_iters);
      if (alive) rec.trace.push_back(f);
    }
    if (!alive) {
      rec.abandoned = true;
      return rec;
    }

    canonicalize_points(system.domain(), x);
    scratch.points = x;
    scratch.weights = w;
    Eigen::MatrixXcd a = detail::gram_from_columns(
        evaluate_system_matrix(system, x), w);
    EighResult eig = hermitian_eigh(HermitianMatrix(a));
    rec.points = x;
    rec.weights = w;
    a.diagonal().array() -= 1.0;
    rec.objective = a.squaredNorm();
    rec.mz = spectral_distance_to_identity(eig.eigenvalues);
    rec.log_det = 0.0;
    for (int k = 0; k < eig.eigenvalues.size(); ++k) {
      double lam = eig.eigenvalues(k);
      rec.log_det += (lam > 0.0)
                         ? std::log(lam)
                         : -std::numeric_limits<double>::infinity();
    }
    rec.success = rec.mz < cfg.eps_target;
    return rec;
  };

  auto better = [](const detail::RestartRecord& a,
                   const detail::RestartRecord& b) {
    if (a.success != b.success) return a.success;
    if (a.mz != b.mz) return a.mz < b.mz;
    return a.objective < b.objective;
  };
  return detail::run_restarts(cfg, run_one, better);
}

// Maximizes log det A(measure) by alternating BFGS point blocks with
// multiplicative weight updates w_i <- w_i * (phi_i^* A^{-1} phi_i) / m,
// which preserve the simplex and increase the determinant monotonically.
// For pointwise-normalized (Christoffel-rescaled) systems the optimum is
// det A = 1, and success is declared when det A >= 1 - 1e-12.
inline DesignResult optimize_logdet(const FunctionSystem& system,
                                    const OptimizeConfig& cfg) {
  const int np = cfg.n_points;
  const int dd = system.domain_dim();
  const int m = system.dim();
  const Eigen::VectorXd scales = system.coordinate_scales();
  const int block_iters = 30;
  const bool normalized =
      dynamic_cast<const ChristoffelRescaledSystem*>(&system) != nullptr;
  const double ld_success = std::log1p(-1e-12);

  auto run_one = [&](int restart) -> detail::RestartRecord {
    detail::RestartRecord rec;
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(restart)));
    Eigen::MatrixXd x;
    Eigen::VectorXd w;
    detail::seed_restart(system, cfg, restart, rng, x, w);

    auto log_det_at = [&](const Eigen::MatrixXd& pts,
                          const Eigen::VectorXd& wts) {
      Eigen::MatrixXcd a = detail::gram_from_columns(
          evaluate_system_matrix(system, pts), wts);
      return detail::logdet_from_llt(Eigen::LLT<Eigen::MatrixXcd>(a));
    };

    // a random cluster can start singular; redraw a few times
    double ld = log_det_at(x, w);
    for (int attempt = 0; attempt < 20 && !std::isfinite(ld); ++attempt) {
      if (restart == 0 && cfg.initial_measure) break;
      detail::random_points(system, rng, x);
      ld = log_det_at(x, w);
    }
    if (!std::isfinite(ld)) {
      rec.abandoned = true;
      return rec;
    }
    rec.trace.push_back(ld);

    Eigen::MatrixXd pts_buf(np, dd);
    auto unpack = [&](const Eigen::VectorXd& u, Eigen::MatrixXd& pts) {
      for (int i = 0; i < np; ++i)
        for (int j = 0; j < dd; ++j) pts(i, j) = scales(j) * u(i * dd + j);
    };
    auto point_f = [&](const Eigen::VectorXd& u) {
      unpack(u, pts_buf);
      return -log_det_at(pts_buf, w);  // -inf objective becomes +inf barrier
    };
    DiscreteMeasure scratch;
    scratch.mode = WeightMode::Conic;
    auto point_fg = [&](const Eigen::VectorXd& u, Eigen::VectorXd& g) {
      unpack(u, pts_buf);
      scratch.points = pts_buf;
      scratch.weights = w;
      DesignGradient dg = logdet_objective_and_gradient(system, scratch);
      g.resize(np * dd);
      for (int i = 0; i < np; ++i)
        for (int j = 0; j < dd; ++j)
          g(i * dd + j) = -scales(j) * dg.point_gradient(i, j);
      return -dg.value;
    };

    // one multiplicative pass over the weights; returns the new log det
    auto weight_updates = [&](long budget) -> double {
      double cur = ld;
      Eigen::MatrixXcd phi = evaluate_system_matrix(system, x);
      for (long t = 0; t < budget; ++t) {
        Eigen::MatrixXcd a = detail::gram_from_columns(phi, w);
        Eigen::LLT<Eigen::MatrixXcd> llt(a);
        if (llt.info() != Eigen::Success) break;
        Eigen::MatrixXcd sol = llt.solve(phi);
        Eigen::VectorXd growth(np);
        for (int i = 0; i < np; ++i)
          growth(i) = phi.col(i).dot(sol.col(i)).real();
        w = w.cwiseProduct(growth) / m;
        double sw = w.sum();
        if (!(sw > 0.0)) break;
        w /= sw;  // analytically 1 already; keep drift out
        ++rec.iterations;
        double next = log_det_at(x, w);
        if (!std::isfinite(next)) break;
        double gain = next - cur;
        cur = next;
        if (gain <= 1e-16 * std::max(1.0, std::abs(cur))) break;
      }
      return cur;
    };

    Eigen::VectorXd u(np * dd);
    auto pack = [&]() {
      for (int i = 0; i < np; ++i)
        for (int j = 0; j < dd; ++j) u(i * dd + j) = x(i, j) / scales(j);
    };

    bool alive = true;
    for (long round = 0; round < cfg.max_iters && alive; ++round) {
      double ld_before = ld;
      pack();
      detail::BfgsOutcome o = detail::bfgs_minimize(
          u, point_f, point_fg, block_iters,
          -std::numeric_limits<double>::infinity());
      if (o.diverged) {
        alive = false;
        break;
      }
      unpack(u, x);
      if (system.domain() == Domain::SphereEmbedded)
        canonicalize_points(Domain::SphereEmbedded, x);
      rec.iterations += o.iterations;
      ld = log_det_at(x, w);
      if (!std::isfinite(ld)) {
        alive = false;
        break;
      }
      rec.trace.push_back(ld);

      if (cfg.weight_mode == WeightPolicy::Free) {
        long room = std::max<long>(0, cfg.max_iters - rec.iterations);
        ld = weight_updates(std::min<long>(200, room));
        rec.trace.push_back(ld);
      }
      if (rec.iterations >= cfg.max_iters) break;
      if (ld - ld_before <= 1e-16 * std::max(1.0, std::abs(ld))) break;
    }
    if (alive && cfg.weight_mode == WeightPolicy::Free) {
      // tail pass tightens the optimality gap for downstream certificates
      long room = std::max<long>(0, cfg.max_iters - rec.iterations);
      ld = weight_updates(std::min<long>(5000, room));
    }
    if (!alive) {
      rec.abandoned = true;
      return rec;
    }

    canonicalize_points(system.domain(), x);
    DiscreteMeasure fin;
    fin.points = x;
    fin.weights = w;
    fin.mode = WeightMode::Conic;
    Eigen::MatrixXcd a = detail::gram_from_columns(
        evaluate_system_matrix(system, x), w);
    EighResult eig = hermitian_eigh(HermitianMatrix(a));
    rec.points = x;
    rec.weights = w;
    rec.mz = spectral_distance_to_identity(eig.eigenvalues);
    Eigen::MatrixXcd dev = a;
    dev.diagonal().array() -= 1.0;
    rec.objective = dev.squaredNorm();
    rec.log_det = 0.0;
    for (int k = 0; k < eig.eigenvalues.size(); ++k) {
      double lam = eig.eigenvalues(k);
      rec.log_det += (lam > 0.0)
                         ? std::log(lam)
                         : -std::numeric_limits<double>::infinity();
    }
    rec.success = normalized && rec.log_det >= ld_success;
    return rec;
  };

  auto better = [](const detail::RestartRecord& a,
                   const detail::RestartRecord& b) {
    if (a.success != b.success) return a.success;
    return a.log_det > b.log_det;
  };
  return detail::run_restarts(cfg, run_one, better);
}

}  // namespace mzforge
