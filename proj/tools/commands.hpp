#pragma once

#include "config.hpp"

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace mfbf::cli {

/// Builds the barrier named by `kind` (none gives null). learned needs a
/// checkpoint path.
BarrierPtr make_barrier(const RunConfig& cfg, const std::string& kind, const std::string& checkpoint);

/// Dataset CSV at cfg.out plus <out>.meta.json.
void cmd_generate(const RunConfig& cfg);

/// Fits a barrier to a dataset CSV (or to fresh nominal-only episodes when
/// data is empty). Writes model.json, history.csv and meta.json under cfg.out.
FitResult cmd_train(const RunConfig& cfg, const std::string& data = {});

/// Initial barrier then cfg.iterations expansion steps. Writes initial.json,
/// iter_<i>.json, data_iter_<i>.csv and metrics.csv under cfg.out. With
/// cfg.checkpoint set, resumes after the checkpoint's iteration.
std::vector<IterationRecord> cmd_iterate(const RunConfig& cfg);

/// rates.csv and episodes.csv under cfg.out.
CollisionTable cmd_evaluate(const RunConfig& cfg);

/// grid_<heading>.csv for each canonical heading under cfg.out.
void cmd_grid(const RunConfig& cfg);

/// summary.csv and trajectory.csv under cfg.out.
EpisodeResult cmd_scenario(const RunConfig& cfg);

/// Unsafe cells summed over the four canonical headings.
int unsafe_cells(const RunConfig& cfg, const BarrierFunction& h);

/// Full command line. Returns 0 on success, 2 on validation errors, 1 on
/// runtime errors.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace mfbf::cli
