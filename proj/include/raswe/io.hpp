#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "raswe/config.hpp"
#include "raswe/estimator.hpp"
#include "raswe/simulation.hpp"
#include "raswe/types.hpp"

namespace raswe::io {

/// Malformed input file content.
struct FormatError : Error {
  using Error::Error;
};

struct AppConfig {
  EstimatorConfig estimator;
  sim::SimScenario scenario;
  bool dwe = false;            // estimator = dwe
  bool sg_filter = false;      // replay.sg_filter
  Vec6 replay_x0 = Vec6::Zero();  // replay start when no truth is given
  bool export_logs = false;    // sim.export_logs
  double gravity = 9.81;
};

/// Flat `key = value` text, `#` comments, dotted keys for sections
/// (`ablation.drag_off = true`, `sim.steps = 500`). Matrix values take a
/// scalar (times identity), the diagonal, or all entries row-major.
/// Unknown or repeated keys are errors.
AppConfig parse_config(std::istream& in, const std::string& source = "<config>");
AppConfig load_config(const std::filesystem::path& path);

struct IngestedLog {
  double t0 = 0.0;  // epoch row; its sensor values are not used
  std::vector<MeasurementFrame> frames;
  long skipped_rows = 0;
  std::vector<std::string> warnings;
};

/// Reads a sensor CSV (header t, ax, ay, az, [qw, qx, qy, qz,] uwb_range,
/// uwb_ok, vx, vy, vz, of_quality). Accelerations are in g; with a
/// quaternion they are rotated to the world frame first, then the input is
/// g * a + (0, 0, -g). Throws FormatError on a bad header or
/// non-increasing time; other bad rows are skipped and counted.
IngestedLog ingest_log(std::istream& in, double gravity = 9.81);
IngestedLog ingest_log(const std::filesystem::path& path, double gravity = 9.81);

/// Inverse of ingest_log with an identity attitude.
void write_log(std::ostream& out, double t0, const std::vector<MeasurementFrame>& frames,
               double gravity = 9.81);

struct TruthRow {
  double t = 0.0;
  Vec6 x = Vec6::Zero();
};

/// CSV with header t, px, py, pz, vx, vy, vz.
std::vector<TruthRow> read_truth(std::istream& in);
std::vector<TruthRow> read_truth(const std::filesystem::path& path);
void write_truth(std::ostream& out, const std::vector<TruthRow>& rows);

/// Ordered numeric key-value pairs, one per line.
class Summary {
 public:
  void set(const std::string& key, double value);
  std::optional<double> get(const std::string& key) const;
  const std::vector<std::pair<std::string, double>>& entries() const { return entries_; }

  friend bool operator==(const Summary&, const Summary&) = default;

 private:
  std::vector<std::pair<std::string, double>> entries_;
};

void write_summary(std::ostream& out, const Summary& s);
Summary read_summary(std::istream& in);

/// One line of the per-step report.
struct ReportRow {
  double t = 0.0;
  bool warmup = false;
  Vec6 x = Vec6::Zero();
  std::optional<Vec3> true_pos;
  std::optional<Vec3> smoothed_pos;
  double avg_trace = 0.0;
  double reduced_det = 0.0;
  double step_length = 0.0;
  double w1 = 0.0;
  double w2 = 0.0;
  double w3 = 0.0;
  Vec6 q_diag = Vec6::Zero();
  Vec4 r_diag = Vec4::Zero();
  Vec3 mu_diag = Vec3::Zero();

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

ReportRow make_row(const StepOutput& out, std::optional<Vec3> true_pos = std::nullopt);

/// Fixed header:
/// t,warmup,px,py,pz,vx,vy,vz,true_px,true_py,true_pz,sg_px,sg_py,sg_pz,
/// avg_trace,reduced_det,step_length,w1,w2,w3,q1..q6,r1..r4,mu1,mu2,mu3.
/// Optional columns are left empty when absent.
void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows);
std::vector<ReportRow> read_report_csv(std::istream& in);

struct RunReport {
  std::vector<ReportRow> rows;
  Summary summary;
};

inline constexpr const char* kReportFile = "report.csv";
inline constexpr const char* kSummaryFile = "summary.txt";

/// Writes dir/report.csv and dir/summary.txt, creating dir.
void write_run_report(const std::filesystem::path& dir, const RunReport& report);
RunReport read_run_report(const std::filesystem::path& dir);

/// Error and KLD metrics under their summary key names.
void add_metrics(Summary& s, const sim::RunMetrics& m);

/// Shortest text that parses back to the same double.
std::string format_number(double v);

}  // namespace raswe::io
