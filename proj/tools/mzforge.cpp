// mzforge: construction and certification of exact discretizations.
//
// Subcommands: design, verify, lattice (search|check|fool), recover
// (build|check), experiment (exp1|exp2|exp3). Exit codes: 0 success,
// 2 completed but non-exact (so sweeps can probe sharpness without error
// handling), 1 error.

#include <CLI11.hpp>

#include <cstdio>
#include <string>

#include "mzforge/design_io.hpp"
#include "mzforge/experiments.hpp"

using namespace mzforge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNonExact = 2;

// l1ball:d:r, hyperbolic:d:T, cube:d:r, explicit:path, or a named
// benchmark set (exp1-i1, exp1-i2, exp1-i3, exp3-1d)
MultiIndexSet parse_index_spec(const std::string& spec) {
  auto split = [](const std::string& s) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
      std::size_t colon = s.find(':', start);
      parts.push_back(s.substr(start, colon - start));
      if (colon == std::string::npos) break;
      start = colon + 1;
    }
    return parts;
  };
  std::vector<std::string> parts = split(spec);
  if (parts.size() == 1) {
    if (parts[0] == "exp1-i1") return l1ball(2, 4);
    if (parts[0] == "exp1-i2") return hyperbolic(2, 6);
    return benchmark_index_set(parts[0]);
  }
  try {
    if (parts[0] == "explicit" && parts.size() == 2)
      return index_set_from_file(parts[1]);
    if (parts.size() == 3) {
      int d = std::stoi(parts[1]);
      std::int64_t r = std::stoll(parts[2]);
      if (parts[0] == "l1ball") return l1ball(d, r);
      if (parts[0] == "hyperbolic") return hyperbolic(d, r);
      if (parts[0] == "cube") return cube(d, r);
    }
  } catch (const std::logic_error&) {
    throw InvalidInput("index spec '" + spec + "': malformed parameters");
  }
  throw InvalidInput(
      "index spec '" + spec +
      "': expected l1ball:d:r, hyperbolic:d:T, cube:d:r, explicit:file, or "
      "a named benchmark set");
}

Index parse_generator(const std::string& text) {
  Index z;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    std::string tok = text.substr(start, comma - start);
    try {
      z.push_back(std::stoll(tok));
    } catch (const std::logic_error&) {
      throw InvalidInput("generator '" + text + "': malformed entry '" + tok +
                         "'");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return z;
}

struct DesignArgs {
  std::string domain = "torus";
  std::string index;
  int degree = 0;
  int p = 2;
  int points = 0;
  int restarts = 10;
  std::uint64_t seed = 1;
  double eps_target = 1e-13;
  std::string weights = "free";
  long max_iters = 20000;
  std::string out;
  std::string csv;
};

int cmd_design(const DesignArgs& a) {
  OptimizeConfig cfg;
  cfg.n_points = a.points;
  cfg.max_restarts = a.restarts;
  cfg.seed = a.seed;
  cfg.eps_target = a.eps_target;
  cfg.max_iters = a.max_iters;
  if (a.weights != "free" && a.weights != "equal")
    throw InvalidInput("--weights: expected equal|free");
  cfg.weight_mode =
      a.weights == "equal" ? WeightPolicy::Equal : WeightPolicy::Free;

  DesignFile file;
  file.domain = a.domain;
  file.p = a.p;
  file.meta.seed = a.seed;

  std::shared_ptr<FunctionSystem> base;
  if (a.domain == "torus") {
    if (a.index.empty()) throw InvalidInput("torus designs need --index");
    file.index_set = parse_index_spec(a.index);
    base = std::make_shared<TrigSystem>(*file.index_set);
  } else if (a.domain == "sphere") {
    if (a.degree < 1) throw InvalidInput("sphere designs need --degree >= 1");
    file.degree = a.degree;
    base = std::make_shared<SphereSystem>(a.degree);
  } else {
    throw InvalidInput("--domain: expected torus|sphere");
  }

  if (a.p == 2) {
    MzDesign des = build_exact_l2_mz(*base, cfg);
    file.measure = des.measure;
    file.mz_constant = des.mz_constant;
    file.exact = des.exact;
    file.meta.restarts = des.restarts_used;
    file.meta.iterations = des.optimizer_iterations;
  } else {
    LpMzDesign des = build_lp_mz_even(*base, a.p, cfg);
    file.measure = des.measure;
    file.mz_constant = des.lifted_mz_constant;
    file.exact = des.exact;
    file.meta.restarts = a.restarts;
  }

  std::printf("points=%d mz_constant=%.6e exact=%d\n", file.measure.size(),
              file.mz_constant, file.exact ? 1 : 0);
  if (!a.out.empty()) write_design_file(a.out, file);
  if (!a.csv.empty()) write_design_csv(a.csv, file.measure);
  return file.exact ? kExitOk : kExitNonExact;
}

int cmd_verify(const std::string& path, double tol) {
  DesignFile d = read_design_file(path);
  double eps = reverify_design(d);
  double drift = std::abs(eps - d.mz_constant);
  bool exact = eps < tol;
  std::printf("stored=%.6e recomputed=%.6e drift=%.3e exact=%d\n",
              d.mz_constant, eps, drift, exact ? 1 : 0);
  if (drift > 1e-14)
    std::printf("warning: stored constant does not reproduce (drift %.3e)\n",
                drift);
  return exact ? kExitOk : kExitNonExact;
}

int cmd_lattice_search(const std::string& index, std::int64_t max_size,
                       long long budget, const std::string& out) {
  MultiIndexSet I = parse_index_spec(index);
  LatticeSearchResult res = minimal_lattice_size(I, max_size, budget);
  if (res.found) {
    std::printf("minimal lattice size M=%lld generator=(",
                static_cast<long long>(res.lattice.size));
    for (std::size_t c = 0; c < res.lattice.generator.size(); ++c)
      std::printf("%s%lld", c ? "," : "",
                  static_cast<long long>(res.lattice.generator[c]));
    std::printf(") after %lld candidates\n",
                static_cast<long long>(res.candidates_tried));
  } else {
    std::printf("no reconstructing lattice up to M=%lld%s\n",
                static_cast<long long>(max_size),
                res.budget_exhausted ? " (candidate budget exhausted)" : "");
  }
  if (!out.empty()) {
    nlohmann::json j;
    j["schema"] = "mzlattice/1";
    j["found"] = res.found;
    j["budget_exhausted"] = res.budget_exhausted;
    j["candidates_tried"] = res.candidates_tried;
    if (res.found) {
      j["size"] = res.lattice.size;
      j["generator"] = res.lattice.generator;
    }
    detail::store_json_file(out, j, "lattice file");
  }
  return res.found ? kExitOk : kExitNonExact;
}

int cmd_lattice_check(const std::string& index, std::int64_t size,
                      const std::string& gen) {
  MultiIndexSet I = parse_index_spec(index);
  Rank1Lattice lat{size, parse_generator(gen)};
  bool ok = reconstructs(I, lat);
  double eps = ok ? lattice_mz_constant(I, lat)
                  : std::numeric_limits<double>::infinity();
  std::printf("reconstructs=%d mz_constant=%.6e\n", ok ? 1 : 0, eps);
  return ok ? kExitOk : kExitNonExact;
}

int cmd_lattice_fool(std::int64_t cap, int dim, const std::string& out) {
  Index a(dim, 0), b(dim, 1);
  MultiIndexSet pair = fooling_index_set(a, b, cap);
  FoolingCertificate cert = verify_fooling(pair, cap);
  std::printf(
      "fooling pair defeats all %lld lattices of size <= %lld; max witness "
      "magnitude on the rational grid %.3e over %lld nodes (norm^2 = 2)\n",
      static_cast<long long>(cert.lattices_checked),
      static_cast<long long>(cap), cert.max_abs_on_nodes,
      static_cast<long long>(cert.nodes_checked));
  if (!out.empty()) {
    nlohmann::json j;
    j["schema"] = "mzfool/1";
    j["index_set"] = index_set_to_json(pair);
    j["lattice_cap"] = cap;
    j["lattices_checked"] = cert.lattices_checked;
    j["nodes_checked"] = cert.nodes_checked;
    j["max_abs_on_nodes"] = cert.max_abs_on_nodes;
    detail::store_json_file(out, j, "fooling file");
  }
  return kExitOk;
}

int cmd_recover_build(int dim, double s, int n, int restarts,
                      std::uint64_t seed, const std::string& out) {
  auto spectrum = std::make_shared<PeriodicSobolevSpectrum>(dim, s);
  OptimizeConfig cfg;
  cfg.seed = seed;
  cfg.max_restarts = restarts;
  RecoveryOperator op = build_recovery(spectrum, n, cfg);
  std::printf("nodes=%d mz_constant=%.6e column_residual=%.6e tie=%d\n",
              op.nodes.size(), op.mz_constant, op.column_residual,
              op.truncation_tie ? 1 : 0);
  if (!out.empty()) write_recovery_file(out, op, dim, s);
  return kExitOk;
}

int cmd_recover_check(const std::string& path, int trials,
                      std::uint64_t seed) {
  RecoveryOperator op = read_recovery_file(path);
  RecoveryErrorReport report = recovery_error_bound_check(op, trials, seed);
  bool ok = report.max_ratio <= 1.0 + 1e-6;
  std::printf(
      "trials=%d max_ratio=%.6e tail=%.6e truncation_terms=%d bound_held=%d\n",
      report.trials, report.max_ratio, report.tail, report.truncation_terms,
      ok ? 1 : 0);
  return ok ? kExitOk : kExitNonExact;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact discretization forge"};
  app.require_subcommand(1);

  DesignArgs da;
  CLI::App* design = app.add_subcommand("design", "construct a design");
  design->add_option("--domain", da.domain, "torus|sphere");
  design->add_option("--index", da.index, "frequency set spec");
  design->add_option("--degree", da.degree, "sphere harmonic degree");
  design->add_option("--p", da.p, "exponent (2 or larger even)");
  design->add_option("--points", da.points, "node count (0 = automatic)");
  design->add_option("--restarts", da.restarts, "restart budget");
  design->add_option("--seed", da.seed, "master seed");
  design->add_option("--eps-target", da.eps_target, "exactness threshold");
  design->add_option("--weights", da.weights, "equal|free");
  design->add_option("--max-iters", da.max_iters, "per-restart step budget");
  design->add_option("--out", da.out, "design JSON output path");
  design->add_option("--csv", da.csv, "design CSV output path");

  std::string verify_path;
  double verify_tol = 1e-13;
  CLI::App* verify = app.add_subcommand("verify", "re-verify a design file");
  verify->add_option("--design", verify_path, "design JSON path")->required();
  verify->add_option("--tol", verify_tol, "exactness threshold");

  CLI::App* lattice = app.add_subcommand("lattice", "rank-1 lattice probes");
  lattice->require_subcommand(1);
  std::string ls_index, lc_index, lc_gen, ls_out, lf_out;
  std::int64_t ls_max = 0, lc_size = 0, lf_cap = 0;
  long long ls_budget = -1;
  int lf_dim = 1;
  CLI::App* lsearch = lattice->add_subcommand("search", "minimal lattice size");
  lsearch->add_option("--index", ls_index, "frequency set spec")->required();
  lsearch->add_option("--max-size", ls_max, "largest size to try")->required();
  lsearch->add_option("--budget", ls_budget, "candidate budget (-1 = none)");
  lsearch->add_option("--out", ls_out, "result JSON path");
  CLI::App* lcheck = lattice->add_subcommand("check", "test one lattice");
  lcheck->add_option("--index", lc_index, "frequency set spec")->required();
  lcheck->add_option("--size", lc_size, "lattice size")->required();
  lcheck->add_option("--gen", lc_gen, "generator z1,z2,...")->required();
  CLI::App* lfool = lattice->add_subcommand(
      "fool", "emit a set invisible to bounded rational grids");
  lfool->add_option("--cap", lf_cap, "denominator / lattice cap")->required();
  lfool->add_option("--dim", lf_dim, "dimension");
  lfool->add_option("--out", lf_out, "result JSON path");

  CLI::App* recover = app.add_subcommand("recover", "sampling recovery");
  recover->require_subcommand(1);
  int rb_dim = 1, rb_n = 8, rb_restarts = 20, rc_trials = 100;
  double rb_s = 2.0;
  std::uint64_t rb_seed = 1, rc_seed = 1;
  std::string rb_kernel = "sobolev", rb_out, rc_op;
  CLI::App* rbuild = recover->add_subcommand("build", "build an operator");
  rbuild->add_option("--kernel", rb_kernel, "kernel family (sobolev)");
  rbuild->add_option("--dim", rb_dim, "domain dimension");
  rbuild->add_option("--s", rb_s, "smoothness");
  rbuild->add_option("--n", rb_n, "recovery space dimension")->required();
  rbuild->add_option("--restarts", rb_restarts, "restart budget");
  rbuild->add_option("--seed", rb_seed, "master seed");
  rbuild->add_option("--out", rb_out, "operator JSON path");
  CLI::App* rcheck = recover->add_subcommand("check", "probe the error bound");
  rcheck->add_option("--op", rc_op, "operator JSON path")->required();
  rcheck->add_option("--trials", rc_trials, "random draws");
  rcheck->add_option("--seed", rc_seed, "master seed");

  CLI::App* experiment =
      app.add_subcommand("experiment", "reproduce a study");
  experiment->require_subcommand(1);
  ExperimentConfig ec;
  std::vector<CLI::App*> exps;
  for (const char* name : {"exp1", "exp2", "exp3"}) {
    CLI::App* e = experiment->add_subcommand(name, "run this study");
    e->add_option("--scale", ec.scale, "desk|full");
    e->add_option("--seed", ec.seed, "master seed");
    e->add_option("--restarts", ec.restarts, "override restart budget");
    e->add_option("--out-dir", ec.out_dir, "output directory");
    exps.push_back(e);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (design->parsed()) return cmd_design(da);
    if (verify->parsed()) return cmd_verify(verify_path, verify_tol);
    if (lsearch->parsed())
      return cmd_lattice_search(ls_index, ls_max, ls_budget, ls_out);
    if (lcheck->parsed()) return cmd_lattice_check(lc_index, lc_size, lc_gen);
    if (lfool->parsed()) return cmd_lattice_fool(lf_cap, lf_dim, lf_out);
    if (rbuild->parsed()) {
      if (rb_kernel != "sobolev")
        throw InvalidInput("--kernel: only 'sobolev' is available");
      return cmd_recover_build(rb_dim, rb_s, rb_n, rb_restarts, rb_seed,
                               rb_out);
    }
    if (rcheck->parsed()) return cmd_recover_check(rc_op, rc_trials, rc_seed);
    if (exps[0]->parsed()) return run_exp1(ec);
    if (exps[1]->parsed()) return run_exp2(ec);
    if (exps[2]->parsed()) return run_exp3(ec);
  } catch (const NonExactDesign& e) {
    std::fprintf(stderr, "non-exact: %s\n", e.what());
    return kExitNonExact;
  } catch (const MzError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
  return kExitError;
}
