#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "mzforge/benchmarks.hpp"
#include "mzforge/design_io.hpp"
#include "mzforge/lattice.hpp"

namespace mzforge {

// Reproduction runs for the three studies shipped with the tool. Desk scale
// finishes in minutes on one core; full scale mirrors the published restart
// budgets and can run for hours. Every cell is checkpointed to its own JSON
// file, so an interrupted run resumes by skipping finished cells.
struct ExperimentConfig {
  std::string scale = "desk";  // desk | full
  std::uint64_t seed = 1;
  int restarts = 0;  // 0 keeps the scale default
  std::string out_dir = ".";
  bool quiet = false;
};

namespace detail {

inline std::filesystem::path cell_path(const ExperimentConfig& cfg,
                                       const std::string& name) {
  return std::filesystem::path(cfg.out_dir) / (name + ".json");
}

inline std::optional<nlohmann::json> load_cell(const ExperimentConfig& cfg,
                                               const std::string& name) {
  auto path = cell_path(cfg, name);
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    nlohmann::json j = nlohmann::json::parse(in);
    if (!j.contains("schema")) return std::nullopt;
    return j;
  } catch (const nlohmann::json::parse_error&) {
    return std::nullopt;  // truncated checkpoint, recompute
  }
}

inline void report_cell(const ExperimentConfig& cfg, const std::string& name,
                        double eps, bool exact, bool cached) {
  if (cfg.quiet) return;
  std::printf("  %-24s eps=%.6e exact=%d%s\n", name.c_str(), eps,
              exact ? 1 : 0, cached ? " (cached)" : "");
}

// one optimization cell: n points for the given frequency set
inline nlohmann::json run_design_cell(const ExperimentConfig& cfg,
                                      const std::string& name,
                                      const MultiIndexSet& I, int n,
                                      int restarts, WeightPolicy mode,
                                      std::uint64_t seed) {
  if (auto cached = load_cell(cfg, name)) {
    report_cell(cfg, name, (*cached)["mz_constant"].get<double>(),
                (*cached)["exact"].get<bool>(), true);
    return *cached;
  }
  TrigSystem system(I);
  OptimizeConfig ocfg;
  ocfg.n_points = n;
  ocfg.max_restarts = restarts;
  ocfg.seed = seed;
  ocfg.weight_mode = mode;
  MzDesign des = build_exact_l2_mz(system, ocfg);
  DesignFile file = design_file_from_result(des, I);
  nlohmann::json j = design_to_json(file);
  store_json_file(cell_path(cfg, name).string(), j, "experiment cell");
  report_cell(cfg, name, des.mz_constant, des.exact, false);
  return j;
}

}  // namespace detail

// Three named point configurations: an l1-ball spectrum, a hyperbolic cross,
// and the 10-frequency benchmark set with entries near 4e7. The third is
// stochastic at any scale; a non-exact outcome is recorded, not an error.
inline int run_exp1(const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  const bool full = cfg.scale == "full";
  struct Cell {
    const char* name;
    MultiIndexSet set;
    int n;
    int restarts;
  };
  const int r12 = cfg.restarts > 0 ? cfg.restarts : (full ? 200 : 50);
  const int r3 = cfg.restarts > 0 ? cfg.restarts : (full ? 1000 : 8);
  std::vector<Cell> cells;
  cells.push_back({"exp1-i1", l1ball(2, 4), 41, r12});
  cells.push_back({"exp1-i2", hyperbolic(2, 6), 45, r12});
  cells.push_back({"exp1-i3", benchmark_index_set("exp1-i3"), 91, r3});

  bool all_exact = true;
  nlohmann::json summary;
  summary["schema"] = "mzexp1/1";
  summary["scale"] = cfg.scale;
  summary["seed"] = cfg.seed;
  summary["cells"] = nlohmann::json::array();
  int idx = 0;
  for (const Cell& c : cells) {
    nlohmann::json j = detail::run_design_cell(
        cfg, c.name, c.set, c.n, c.restarts, WeightPolicy::Free,
        derive_seed(cfg.seed, static_cast<std::uint64_t>(idx)));
    DesignFile d = design_from_json(j);
    write_design_csv(
        (std::filesystem::path(cfg.out_dir) / (std::string(c.name) + ".csv"))
            .string(),
        d.measure);
    summary["cells"].push_back({{"name", c.name},
                                {"n", c.n},
                                {"mz_constant", d.mz_constant},
                                {"exact", d.exact},
                                {"file", c.name + std::string(".json")}});
    all_exact = all_exact && d.exact;
    ++idx;
  }
  detail::store_json_file(
      (std::filesystem::path(cfg.out_dir) / "exp1_summary.json").string(),
      summary, "experiment summary");
  return all_exact ? 0 : 2;
}

// Threshold scan: for each dimension, draw a fixed number of random
// frequencies, sweep the point count across the difference-set dimension and
// record where the constant collapses. Desk scale uses 8 frequencies from
// {-30..30}^d and a narrow window; full scale uses 20 from {-100..100}^d.
inline int run_exp2(const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  const bool full = cfg.scale == "full";
  const int n_freq = full ? 20 : 8;
  const std::int64_t box = full ? 100 : 30;
  const int restarts = cfg.restarts > 0 ? cfg.restarts : (full ? 50 : 10);
  const std::vector<int> dims =
      full ? std::vector<int>{1, 2, 3, 4, 5, 6, 7} : std::vector<int>{1, 2, 3};

  std::ofstream csv(std::filesystem::path(cfg.out_dir) / "exp2_grid.csv");
  csv << "d,n,eps,exact,iterations,restarts_used,seed\n";
  csv.precision(17);

  nlohmann::json summary;
  summary["schema"] = "mzexp2/1";
  summary["scale"] = cfg.scale;
  summary["seed"] = cfg.seed;
  summary["dims"] = nlohmann::json::array();

  bool all_found = true;
  for (int d : dims) {
    // seed-controlled frequency draw, deduplicated
    Rng rng(derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(d)));
    std::vector<Index> rows;
    while (static_cast<int>(rows.size()) < n_freq) {
      Index k(d);
      for (int c = 0; c < d; ++c)
        k[c] = static_cast<std::int64_t>(rng.below(2 * box + 1)) - box;
      if (std::find(rows.begin(), rows.end(), k) == rows.end())
        rows.push_back(k);
    }
    MultiIndexSet I(d, rows);
    const int span = difference_set(I).size();

    // the window starts just above the space dimension so the infeasible
    // plateau, the collapse, and the exact regime are all inside the scan
    const int lo = n_freq + 2;
    const int hi = full ? span + 20 : span + 4;
    const int step = full ? 4 : 2;

    int n_star = -1;
    for (int n = lo; n <= hi; n += step) {
      std::string name =
          "exp2-d" + std::to_string(d) + "-n" + std::to_string(n);
      std::uint64_t cell_seed = derive_seed(
          cfg.seed, static_cast<std::uint64_t>(d) * 100000 +
                        static_cast<std::uint64_t>(n));
      nlohmann::json j = detail::run_design_cell(
          cfg, name, I, n, restarts, WeightPolicy::Free, cell_seed);
      double eps = j["mz_constant"].get<double>();
      bool exact = j["exact"].get<bool>();
      csv << d << ',' << n << ',' << eps << ',' << (exact ? 1 : 0) << ','
          << j["meta"]["iterations"].get<long>() << ','
          << j["meta"]["restarts"].get<int>() << ',' << cell_seed << '\n';
      if (n_star < 0 && eps < 1e-10) n_star = n;
    }
    summary["dims"].push_back({{"d", d},
                               {"span_dim", span},
                               {"n_star", n_star},
                               {"window", {lo, hi}},
                               {"comparison_400_over_d", 400 / d}});
    all_found = all_found && n_star > 0;
  }
  detail::store_json_file(
      (std::filesystem::path(cfg.out_dir) / "exp2_summary.json").string(),
      summary, "experiment summary");
  return all_found ? 0 : 2;
}

// Equal-versus-free weight comparison on the 1-D benchmark set around the
// difference-set dimension 91. The published free-weight collapse at n = 91
// needed a four-digit restart budget; desk scale documents the curve shape
// with a small budget and records whatever it finds.
inline int run_exp3(const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  const bool full = cfg.scale == "full";
  MultiIndexSet I = benchmark_index_set("exp3-1d");
  const int span = difference_set(I).size();  // 91
  const int restarts = cfg.restarts > 0 ? cfg.restarts : (full ? 1000 : 6);
  std::vector<int> ns;
  if (full)
    for (int n = span - 8; n <= span + 8; n += 2) ns.push_back(n);
  else
    ns = {span - 2, span, span + 2};

  std::ofstream csv(std::filesystem::path(cfg.out_dir) / "exp3_curves.csv");
  csv << "mode,n,eps,exact,iterations,restarts_used,seed\n";
  csv.precision(17);

  int drop_free = -1, drop_equal = -1;
  for (const char* mode : {"free", "equal"}) {
    WeightPolicy policy =
        std::string(mode) == "free" ? WeightPolicy::Free : WeightPolicy::Equal;
    for (int n : ns) {
      std::string name = "exp3-" + std::string(mode) + "-n" + std::to_string(n);
      std::uint64_t cell_seed = derive_seed(
          cfg.seed, (policy == WeightPolicy::Free ? 0ull : 1ull) * 1000000 +
                        static_cast<std::uint64_t>(n));
      nlohmann::json j = detail::run_design_cell(cfg, name, I, n, restarts,
                                                 policy, cell_seed);
      double eps = j["mz_constant"].get<double>();
      bool exact = j["exact"].get<bool>();
      csv << mode << ',' << n << ',' << eps << ',' << (exact ? 1 : 0) << ','
          << j["meta"]["iterations"].get<long>() << ','
          << j["meta"]["restarts"].get<int>() << ',' << cell_seed << '\n';
      if (eps < 1e-10) {
        if (policy == WeightPolicy::Free && (drop_free < 0 || n < drop_free))
          drop_free = n;
        if (policy == WeightPolicy::Equal &&
            (drop_equal < 0 || n < drop_equal))
          drop_equal = n;
      }
    }
  }

  nlohmann::json summary;
  summary["schema"] = "mzexp3/1";
  summary["scale"] = cfg.scale;
  summary["seed"] = cfg.seed;
  summary["span_dim"] = span;
  summary["first_exact_free"] = drop_free;
  summary["first_exact_equal"] = drop_equal;
  detail::store_json_file(
      (std::filesystem::path(cfg.out_dir) / "exp3_summary.json").string(),
      summary, "experiment summary");
  return drop_free > 0 ? 0 : 2;
}

}  // namespace mzforge
