#pragma once

#include <exception>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "dcpo/config.hpp"
#include "dcpo/eval.hpp"
#include "dcpo/world.hpp"

namespace dcpo {

inline const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names{"gen-data", "analyze-overlap", "perturb", "train",
                                              "eval",     "sweep",           "check",   "plot-data"};
  return names;
}

/// Runs one subcommand, writing artifacts plus config.json and VERSION into
/// the run directory. Returns 0, or 2 when a `check` gate fails; other
/// failures propagate as exceptions.
int run_subcommand(const std::string& name, const RunConfig& config, std::ostream& log);

/// 1 config/usage, 2 numeric, 3 infeasible.
int exit_code_for(const std::exception& error);

/// Long-format series,x,y,spread rows. Empty inputs are errors.
std::string overlap_plot_data(const OverlapReport& report);
std::string sweep_plot_data(const SweepCurve& curve);

/// Converts every known report in `run_dir` (overlap.csv, sweep.csv) into
/// plot_*.csv files; returns the files written. Throws when none exist.
std::vector<std::filesystem::path> emit_plot_data(const std::filesystem::path& run_dir);

}  // namespace dcpo
