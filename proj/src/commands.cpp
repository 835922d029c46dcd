#include "raswe/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <ostream>
#include <string>

#include "raswe/io.hpp"
#include "raswe/metrics.hpp"
#include "raswe/model.hpp"
#include "raswe/simulation.hpp"

namespace raswe::cli {

namespace {

std::string run_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "run_%04d", i);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
  if (!f) throw Error("failed writing " + path.string());
}

void write_run(const fs::path& dir, const sim::SimScenario& scenario, const sim::RunResult& r,
               bool export_logs) {
  io::RunReport report;
  for (std::size_t i = 0; i < r.series.steps.size(); ++i) {
    report.rows.push_back(io::make_row(r.series.steps[i], r.series.true_pos[i]));
  }
  report.summary.set("seed", static_cast<double>(r.seed));
  report.summary.set("ok", r.ok ? 1.0 : 0.0);
  if (r.ok) io::add_metrics(report.summary, r.metrics);
  io::write_run_report(dir, report);
  if (!r.ok) write_text(dir / "error.txt", r.error + "\n");

  if (export_logs) {
    sim::SimScenario s = scenario;
    s.seed = r.seed;
    const sim::SimTruth truth = sim::simulate_truth(s);
    std::ofstream log(dir / "log.csv");
    io::write_log(log, 0.0, truth.frames);
    std::vector<io::TruthRow> rows;
    for (std::size_t k = 0; k < truth.x.size(); ++k) {
      rows.push_back({static_cast<double>(k) * s.dt, truth.x[k]});
    }
    std::ofstream tf(dir / "truth.csv");
    io::write_truth(tf, rows);
    if (!log || !tf) throw Error("failed writing logs to " + dir.string());
  }
}

const io::TruthRow* truth_at(const std::vector<io::TruthRow>& rows, double t) {
  const double tol = 1e-9 * std::max(1.0, std::abs(t));
  auto it = std::lower_bound(rows.begin(), rows.end(), t - tol,
                             [](const io::TruthRow& r, double v) { return r.t < v; });
  if (it != rows.end() && std::abs(it->t - t) <= tol) return &*it;
  return nullptr;
}

}  // namespace

int cmd_simulate(const fs::path& config, int runs, std::uint64_t seed, const fs::path& out,
                 std::ostream& err, unsigned threads) {
  try {
    io::AppConfig cfg = io::load_config(config);
    if (runs < 1) throw ConfigError("number of runs must be at least 1");
    cfg.scenario.seed = seed;
    cfg.scenario.validate();
    fs::create_directories(out / "runs");

    std::mutex mu;
    std::vector<std::string> write_errors;
    auto on_run = [&](int i, const sim::RunResult& r) {
      try {
        write_run(out / "runs" / run_name(i), cfg.scenario, r, cfg.export_logs);
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        write_errors.push_back(e.what());
      }
    };

    const auto start = std::chrono::steady_clock::now();
    const sim::BatchResult batch =
        sim::run_monte_carlo(cfg.scenario, runs, cfg.estimator, false, threads, on_run);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;

    io::Summary s;
    s.set("runs", runs);
    s.set("failed", batch.failed);
    s.set("seed", static_cast<double>(seed));
    if (batch.failed < runs) io::add_metrics(s, batch.mean);
    std::ofstream sum(out / io::kSummaryFile);
    io::write_summary(sum, s);
    write_text(out / "timing.txt", "runtime_s = " + io::format_number(elapsed.count()) + "\n");

    for (const auto& r : batch.runs) {
      if (!r.ok) err << "run with seed " << r.seed << " failed: " << r.error << '\n';
    }
    for (const auto& e : write_errors) err << e << '\n';
    if (!sum) throw Error("failed writing summary");
    return batch.failed == 0 && write_errors.empty() ? 0 : 1;
  } catch (const std::exception& e) {
    err << "simulate: " << e.what() << '\n';
    return 1;
  }
}

int cmd_replay(const fs::path& config, const fs::path& log_path,
               const std::optional<fs::path>& truth_path, const fs::path& out, std::ostream& err) {
  try {
    const io::AppConfig cfg = io::load_config(config);
    const io::IngestedLog log = io::ingest_log(log_path, cfg.gravity);
    for (const auto& w : log.warnings) err << "replay: skipped " << w << '\n';
    std::vector<io::TruthRow> truth;
    if (truth_path) truth = io::read_truth(*truth_path);

    Vec6 x0 = cfg.replay_x0;
    if (truth_path) {
      const io::TruthRow* r0 = truth_at(truth, log.t0);
      if (!r0) throw Error("truth has no row at the log epoch");
      x0 = r0->x;
    }

    Estimator est(cfg.estimator, {x0, cfg.estimator.P0}, log.t0);
    io::RunReport report;
    for (const MeasurementFrame& f : log.frames) {
      const StepOutput o = est.push(f);
      std::optional<Vec3> tp;
      if (const io::TruthRow* r = truth_at(truth, f.t)) tp = r->x.head<3>();
      report.rows.push_back(io::make_row(o, tp));
    }

    io::Summary& s = report.summary;
    s.set("steps", static_cast<double>(log.frames.size()));
    s.set("skipped_rows", static_cast<double>(log.skipped_rows));

    std::vector<std::size_t> evaluated;
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
      if (!report.rows[i].warmup && report.rows[i].true_pos) evaluated.push_back(i);
    }
    s.set("evaluated", static_cast<double>(evaluated.size()));

    if (cfg.sg_filter && report.rows.size() >= 9) {
      std::vector<Vec3> pos;
      for (const auto& r : report.rows) pos.push_back(r.x.head<3>());
      const auto smoothed = metrics::savitzky_golay(pos, 3, 9);
      for (std::size_t i = 0; i < report.rows.size(); ++i) report.rows[i].smoothed_pos = smoothed[i];
    }

    if (!evaluated.empty()) {
      std::vector<Vec3> est_pos, true_pos, sg_pos;
      for (std::size_t i : evaluated) {
        est_pos.push_back(report.rows[i].x.head<3>());
        true_pos.push_back(*report.rows[i].true_pos);
        if (report.rows[i].smoothed_pos) sg_pos.push_back(*report.rows[i].smoothed_pos);
      }
      const Vec3 axis = metrics::rmse_per_axis(est_pos, true_pos);
      const Vec3 sd = metrics::error_std_per_axis(est_pos, true_pos);
      s.set("position_rmse", metrics::rmse_euclidean(est_pos, true_pos));
      s.set("rmse_x", axis(0));
      s.set("rmse_y", axis(1));
      s.set("rmse_z", axis(2));
      s.set("std_x", sd(0));
      s.set("std_y", sd(1));
      s.set("std_z", sd(2));
      if (sg_pos.size() == true_pos.size()) {
        s.set("position_rmse_sg", metrics::rmse_euclidean(sg_pos, true_pos));
      }
    } else if (truth_path) {
      err << "replay: no post-warm-up step has a truth row\n";
    }

    io::write_run_report(out, report);
    return 0;
  } catch (const std::exception& e) {
    err << "replay: " << e.what() << '\n';
    return 1;
  }
}

int cmd_report(const std::vector<fs::path>& dirs, std::ostream& out, std::ostream& err,
               const std::optional<fs::path>& csv) {
  try {
    if (dirs.empty()) throw Error("no run directories given");
    std::vector<io::Summary> sums;
    std::vector<std::string> keys;
    for (const auto& d : dirs) {
      std::ifstream in(d / io::kSummaryFile);
      if (!in) throw Error("cannot open " + (d / io::kSummaryFile).string());
      sums.push_back(io::read_summary(in));
      for (const auto& [k, v] : sums.back().entries()) {
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
      }
    }

    std::vector<std::vector<std::string>> table;
    table.push_back({"run"});
    for (const auto& k : keys) table[0].push_back(k);
    for (std::size_t i = 0; i < dirs.size(); ++i) {
      std::vector<std::string> row{dirs[i].string()};
      for (const auto& k : keys) {
        const auto v = sums[i].get(k);
        char buf[32] = "-";
        if (v) std::snprintf(buf, sizeof buf, "%.6g", *v);
        row.push_back(buf);
      }
      table.push_back(std::move(row));
    }

    std::vector<std::size_t> width(table[0].size(), 0);
    for (const auto& row : table) {
      for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    }
    for (const auto& row : table) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out << "  ";
        out << row[c] << std::string(width[c] - row[c].size(), ' ');
      }
      out << '\n';
    }

    if (csv) {
      std::ofstream f(*csv);
      for (const auto& k : table[0]) f << (&k == &table[0][0] ? "" : ",") << k;
      f << '\n';
      for (std::size_t i = 0; i < dirs.size(); ++i) {
        f << dirs[i].string();
        for (const auto& k : keys) {
          f << ',';
          if (const auto v = sums[i].get(k)) f << io::format_number(*v);
        }
        f << '\n';
      }
      if (!f) throw Error("failed writing " + csv->string());
    }
    return 0;
  } catch (const std::exception& e) {
    err << "report: " << e.what() << '\n';
    return 1;
  }
}

int cmd_observability(const fs::path& config, const Vec3& pos, std::ostream& out,
                      std::ostream& err) {
  try {
    const io::AppConfig cfg = io::load_config(config);
    const double dt = cfg.scenario.dt;
    const Mat6 A = model::build_transition(dt, DragMatrix(cfg.estimator.mu0));
    const Vec3 rel = pos - cfg.estimator.anchor;
    const bool degenerate = rel.norm() < model::kMinAnchorDistance;
    const Mat46 C = degenerate ? model::velocity_only_observation() : model::build_observation(rel);

    const int raw = model::observability_rank(A, C);
    const int aug = model::augmented_observability_rank(A, C);
    out << "position = " << pos.x() << ", " << pos.y() << ", " << pos.z() << '\n';
    out << "dt = " << dt << '\n';
    out << "range_row = " << (degenerate ? "degenerate" : "ok") << '\n';
    out << "rank_raw = " << raw << '\n';
    out << "rank_augmented = " << aug << '\n';
    out << "observable_raw = " << (raw == kStateDim ? "yes" : "no") << '\n';
    out << "observable_augmented = " << (aug == kStateDim ? "yes" : "no") << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "observability: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace raswe::cli
