#pragma once

#include <string>
#include <vector>

#include "lieode/runner.hpp"

namespace lieode {

/// Paths written by an emitter, in write order.
struct Artifacts {
  std::string directory;
  std::vector<std::string> files;
};

/// Write <label>_solution.csv, <label>_loss.csv and <label>_summary.txt
/// under `out_dir` (created if missing). All CSV numbers carry 17
/// significant digits; two runs with identical seed/config produce
/// byte-identical CSVs. The summary echoes the configuration and metrics
/// (its wall-time line is the one run-dependent value).
Artifacts write_run_artifacts(const RunResult& run, const std::string& out_dir);

/// Artifacts for both legs plus compare.csv with the first-term curves.
Artifacts write_compare_artifacts(const CompareResult& cmp,
                                  const std::string& out_dir);

/// sweep.csv (one row per value and data class) plus a summary.
Artifacts write_sweep_artifacts(const SweepResult& sweep, const std::string& label,
                                const std::string& out_dir);

}  // namespace lieode
