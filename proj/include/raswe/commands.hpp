#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "raswe/types.hpp"

namespace raswe::cli {

namespace fs = std::filesystem;

// Every command returns a process exit status (0 on success) and reports
// problems on `err` instead of throwing.

/// Monte Carlo batch. Writes out/summary.txt (means over successful runs),
/// out/timing.txt and out/runs/run_NNNN/{report.csv, summary.txt}, plus
/// log.csv and truth.csv per run when sim.export_logs is set.
int cmd_simulate(const fs::path& config, int runs, std::uint64_t seed, const fs::path& out,
                 std::ostream& err, unsigned threads = 0);

/// Runs the estimator over a recorded log and writes out/report.csv and
/// out/summary.txt. Error metrics need a truth file.
int cmd_replay(const fs::path& config, const fs::path& log, const std::optional<fs::path>& truth,
               const fs::path& out, std::ostream& err);

/// One row per directory, one column per summary key.
int cmd_report(const std::vector<fs::path>& dirs, std::ostream& out, std::ostream& err,
               const std::optional<fs::path>& csv = std::nullopt);

/// Observability rank at `pos` with the configured drag, dt and anchor.
int cmd_observability(const fs::path& config, const Vec3& pos, std::ostream& out,
                      std::ostream& err);

}  // namespace raswe::cli
