#include "raswe/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace raswe::io {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<double> parse_double(const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || s.empty()) return std::nullopt;
  return v;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

// ---- config ----------------------------------------------------------------

class ConfigValue {
 public:
  ConfigValue(std::string key, std::string text, std::string where)
      : key_(std::move(key)), text_(std::move(text)), where_(std::move(where)) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(where_ + ": " + key_ + ": " + what);
  }

  double number() const {
    const auto v = parse_double(text_);
    if (!v) fail("expected a number, got '" + text_ + "'");
    return *v;
  }

  int integer() const {
    const double v = number();
    if (v != std::floor(v) || std::abs(v) > 1e9) fail("expected an integer");
    return static_cast<int>(v);
  }

  bool boolean() const {
    if (text_ == "true" || text_ == "1") return true;
    if (text_ == "false" || text_ == "0") return false;
    fail("expected true or false, got '" + text_ + "'");
  }

  std::vector<double> list() const {
    std::string s = text_;
    if (!s.empty() && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream ss(s);
    std::vector<double> out;
    std::string tok;
    while (ss >> tok) {
      const auto v = parse_double(tok);
      if (!v) fail("bad list entry '" + tok + "'");
      out.push_back(*v);
    }
    return out;
  }

  template <int N>
  Eigen::Matrix<double, N, 1> vector() const {
    const auto v = list();
    if (static_cast<int>(v.size()) != N) fail("expected " + std::to_string(N) + " values");
    return Eigen::Map<const Eigen::Matrix<double, N, 1>>(v.data());
  }

  template <int N>
  Eigen::Matrix<double, N, N> matrix() const {
    using M = Eigen::Matrix<double, N, N>;
    const auto v = list();
    if (v.size() == 1) return v[0] * M::Identity();
    if (static_cast<int>(v.size()) == N) {
      return Eigen::Map<const Eigen::Matrix<double, N, 1>>(v.data()).asDiagonal();
    }
    if (static_cast<int>(v.size()) == N * N) {
      return Eigen::Map<const Eigen::Matrix<double, N, N, Eigen::RowMajor>>(v.data());
    }
    fail("expected 1, " + std::to_string(N) + " or " + std::to_string(N * N) + " values");
  }

  std::vector<sim::Outage> outages() const {
    std::vector<sim::Outage> out;
    std::string s = text_;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream ss(s);
    std::string tok;
    while (ss >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) fail("outage '" + tok + "' must be first:length");
      const auto first = parse_double(tok.substr(0, colon));
      const auto len = parse_double(tok.substr(colon + 1));
      if (!first || !len || *first < 1 || *len < 0) fail("bad outage '" + tok + "'");
      out.push_back({static_cast<long>(*first), static_cast<long>(*len)});
    }
    return out;
  }

  const std::string& text() const { return text_; }

 private:
  std::string key_;
  std::string text_;
  std::string where_;
};

using Setter = void (*)(AppConfig&, const ConfigValue&);

const std::map<std::string, Setter>& config_keys() {
  static const std::map<std::string, Setter> keys = {
      {"estimator",
       [](AppConfig& c, const ConfigValue& v) {
         if (v.text() == "raswe") c.dwe = false;
         else if (v.text() == "dwe") c.dwe = true;
         else v.fail("expected raswe or dwe");
       }},
      {"window_length", [](AppConfig& c, const ConfigValue& v) { c.estimator.window_length = v.integer(); }},
      {"lambda0", [](AppConfig& c, const ConfigValue& v) { c.estimator.lambda0 = v.number(); }},
      {"f1", [](AppConfig& c, const ConfigValue& v) { c.estimator.f1 = v.number(); }},
      {"f2", [](AppConfig& c, const ConfigValue& v) { c.estimator.f2 = v.number(); }},
      {"epsilon", [](AppConfig& c, const ConfigValue& v) { c.estimator.epsilon = v.number(); }},
      {"b_u", [](AppConfig& c, const ConfigValue& v) { c.estimator.b_u = v.number(); }},
      {"b_l", [](AppConfig& c, const ConfigValue& v) { c.estimator.b_l = v.number(); }},
      {"mu0", [](AppConfig& c, const ConfigValue& v) { c.estimator.mu0 = v.matrix<3>(); }},
      {"P0", [](AppConfig& c, const ConfigValue& v) { c.estimator.P0 = v.matrix<6>(); }},
      {"Phi0", [](AppConfig& c, const ConfigValue& v) { c.estimator.Phi0 = v.matrix<6>(); }},
      {"phi0", [](AppConfig& c, const ConfigValue& v) { c.estimator.phi0 = v.number(); }},
      {"Psi0", [](AppConfig& c, const ConfigValue& v) { c.estimator.Psi0 = v.matrix<4>(); }},
      {"psi0", [](AppConfig& c, const ConfigValue& v) { c.estimator.psi0 = v.number(); }},
      {"warmup", [](AppConfig& c, const ConfigValue& v) { c.estimator.warmup = v.integer(); }},
      {"anchor", [](AppConfig& c, const ConfigValue& v) { c.estimator.anchor = v.vector<3>(); }},
      {"gravity", [](AppConfig& c, const ConfigValue& v) { c.gravity = v.number(); }},
      {"ablation.errprop_off",
       [](AppConfig& c, const ConfigValue& v) { c.estimator.ablation.errprop_off = v.boolean(); }},
      {"ablation.coherence_off",
       [](AppConfig& c, const ConfigValue& v) { c.estimator.ablation.coherence_off = v.boolean(); }},
      {"ablation.consistency_off",
       [](AppConfig& c, const ConfigValue& v) { c.estimator.ablation.consistency_off = v.boolean(); }},
      {"ablation.drag_off",
       [](AppConfig& c, const ConfigValue& v) { c.estimator.ablation.drag_off = v.boolean(); }},
      {"ablation.adapt_off",
       [](AppConfig& c, const ConfigValue& v) { c.estimator.ablation.adapt_off = v.boolean(); }},
      {"replay.sg_filter", [](AppConfig& c, const ConfigValue& v) { c.sg_filter = v.boolean(); }},
      {"replay.x0", [](AppConfig& c, const ConfigValue& v) { c.replay_x0 = v.vector<6>(); }},
      {"sim.steps",
       [](AppConfig& c, const ConfigValue& v) { c.scenario.steps = v.integer(); }},
      {"sim.dt", [](AppConfig& c, const ConfigValue& v) { c.scenario.dt = v.number(); }},
      {"sim.seed",
       [](AppConfig& c, const ConfigValue& v) {
         const int s = v.integer();
         if (s < 0) v.fail("seed must be non-negative");
         c.scenario.seed = static_cast<std::uint64_t>(s);
       }},
      {"sim.start", [](AppConfig& c, const ConfigValue& v) { c.scenario.x0 = v.vector<6>(); }},
      {"sim.noise_scale", [](AppConfig& c, const ConfigValue& v) { c.scenario.noise_scale = v.number(); }},
      {"sim.process_noise_scale",
       [](AppConfig& c, const ConfigValue& v) { c.scenario.process_noise_scale = v.number(); }},
      {"sim.init_from_truth",
       [](AppConfig& c, const ConfigValue& v) { c.scenario.init_from_truth = v.boolean(); }},
      {"sim.uwb_outages", [](AppConfig& c, const ConfigValue& v) { c.scenario.uwb_outages = v.outages(); }},
      {"sim.of_outages", [](AppConfig& c, const ConfigValue& v) { c.scenario.of_outages = v.outages(); }},
      {"sim.export_logs", [](AppConfig& c, const ConfigValue& v) { c.export_logs = v.boolean(); }},
  };
  return keys;
}

// ---- csv -------------------------------------------------------------------

class CsvHeader {
 public:
  explicit CsvHeader(const std::string& line) {
    const auto names = split(line, ',');
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (!index_.emplace(names[i], i).second) throw FormatError("duplicate column " + names[i]);
    }
    size_ = names.size();
  }

  std::optional<std::size_t> find(const std::string& name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t require(const std::string& name) const {
    const auto i = find(name);
    if (!i) throw FormatError("missing column " + name);
    return *i;
  }

  std::size_t size() const { return size_; }

 private:
  std::map<std::string, std::size_t> index_;
  std::size_t size_ = 0;
};

struct RowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double field(const std::vector<std::string>& row, std::size_t i, const char* name) {
  const auto v = parse_double(row[i]);
  if (!v || !std::isfinite(*v)) throw RowError(std::string("bad ") + name + " '" + row[i] + "'");
  return *v;
}

std::optional<double> optional_field(const std::vector<std::string>& row, std::size_t i,
                                     const char* name) {
  if (row[i].empty()) return std::nullopt;
  return field(row, i, name);
}

bool truthy(const std::string& s) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false" || s.empty()) return false;
  throw RowError("bad flag '" + s + "'");
}

void put(std::ostream& out, double v) { out << format_number(v); }

void put(std::ostream& out, const std::optional<Vec3>& v) {
  for (int i = 0; i < 3; ++i) {
    out << ',';
    if (v) put(out, (*v)(i));
  }
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error("number formatting failed");
  return std::string(buf, p);
}

AppConfig parse_config(std::istream& in, const std::string& source) {
  AppConfig cfg;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    const auto it = config_keys().find(key);
    if (it == config_keys().end()) throw ConfigError(where + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError(where + ": key '" + key + "' repeated");
    if (value.empty()) throw ConfigError(where + ": " + key + ": missing value");
    it->second(cfg, ConfigValue(key, value, where));
  }

  cfg.scenario.warmup = cfg.estimator.warmup;
  cfg.scenario.anchor = cfg.estimator.anchor;
  if (cfg.dwe) cfg.estimator = dwe_config(cfg.estimator);
  if (!(cfg.gravity > 0.0)) throw ConfigError(source + ": gravity must be positive");
  cfg.estimator.validate();
  return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return parse_config(in, path.string());
}

IngestedLog ingest_log(std::istream& in, double gravity) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty log");
  const CsvHeader h(line);
  const std::size_t it = h.require("t"), iax = h.require("ax"), iay = h.require("ay"),
                    iaz = h.require("az"), irange = h.require("uwb_range"),
                    iuok = h.require("uwb_ok"), ivx = h.require("vx"), ivy = h.require("vy"),
                    ivz = h.require("vz"), iq = h.require("of_quality");
  const auto qw = h.find("qw"), qx = h.find("qx"), qy = h.find("qy"), qz = h.find("qz");
  const bool has_quat = qw || qx || qy || qz;
  if (has_quat && !(qw && qx && qy && qz)) throw FormatError("quaternion needs qw, qx, qy, qz");

  IngestedLog log;
  bool have_epoch = false;
  double last_t = 0.0;
  long rowno = 1;
  while (std::getline(in, line)) {
    ++rowno;
    if (trim(line).empty()) continue;
    const auto row = split(line, ',');
    MeasurementFrame f;
    try {
      if (row.size() != h.size()) throw RowError("expected " + std::to_string(h.size()) + " fields");
      f.t = field(row, it, "t");
      Vec3 a(field(row, iax, "ax"), field(row, iay, "ay"), field(row, iaz, "az"));
      if (has_quat) {
        Eigen::Quaterniond q(field(row, *qw, "qw"), field(row, *qx, "qx"), field(row, *qy, "qy"),
                             field(row, *qz, "qz"));
        if (!(q.norm() > 0.0)) throw RowError("zero quaternion");
        a = q.normalized() * a;
      }
      f.accel_input = gravity * a + Vec3(0.0, 0.0, -gravity);

      f.uwb_range = optional_field(row, irange, "uwb_range");
      f.uwb_ok = f.uwb_range.has_value() && truthy(row[iuok]);

      const auto vx = optional_field(row, ivx, "vx");
      const auto vy = optional_field(row, ivy, "vy");
      const auto vz = optional_field(row, ivz, "vz");
      if (vx && vy && vz) f.of_velocity = Vec3(*vx, *vy, *vz);
      const auto quality = optional_field(row, iq, "of_quality");
      f.of_ok = f.of_velocity.has_value() && quality && *quality >= 255.0;
    } catch (const RowError& e) {
      ++log.skipped_rows;
      log.warnings.push_back("row " + std::to_string(rowno) + ": " + e.what());
      continue;
    }

    if (have_epoch && !(f.t > last_t)) {
      throw FormatError("row " + std::to_string(rowno) + ": time does not increase");
    }
    last_t = f.t;
    if (!have_epoch) {
      have_epoch = true;
      log.t0 = f.t;
      continue;
    }
    log.frames.push_back(std::move(f));
  }
  if (!have_epoch) throw FormatError("log has no valid rows");
  return log;
}

IngestedLog ingest_log(const std::filesystem::path& path, double gravity) {
  std::ifstream in = open_in(path);
  return ingest_log(in, gravity);
}

void write_log(std::ostream& out, double t0, const std::vector<MeasurementFrame>& frames,
               double gravity) {
  out << "t,ax,ay,az,qw,qx,qy,qz,uwb_range,uwb_ok,vx,vy,vz,of_quality\n";
  out << format_number(t0) << ",0,0,1,1,0,0,0,,0,,,,0\n";
  for (const MeasurementFrame& f : frames) {
    const Vec3 a = (f.accel_input + Vec3(0.0, 0.0, gravity)) / gravity;
    put(out, f.t);
    for (int i = 0; i < 3; ++i) {
      out << ',';
      put(out, a(i));
    }
    out << ",1,0,0,0,";
    if (f.uwb_range) put(out, *f.uwb_range);
    out << ',' << (f.uwb_ok ? 1 : 0);
    put(out, f.of_velocity);
    out << ',' << (f.of_ok ? 255 : 0) << '\n';
  }
}

std::vector<TruthRow> read_truth(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty truth file");
  const CsvHeader h(line);
  const char* names[] = {"t", "px", "py", "pz", "vx", "vy", "vz"};
  std::size_t idx[7];
  for (int i = 0; i < 7; ++i) idx[i] = h.require(names[i]);

  std::vector<TruthRow> rows;
  long rowno = 1;
  while (std::getline(in, line)) {
    ++rowno;
    if (trim(line).empty()) continue;
    const auto row = split(line, ',');
    try {
      if (row.size() != h.size()) throw RowError("wrong field count");
      TruthRow r;
      r.t = field(row, idx[0], names[0]);
      for (int i = 0; i < 6; ++i) r.x(i) = field(row, idx[i + 1], names[i + 1]);
      if (!rows.empty() && !(r.t > rows.back().t)) throw RowError("time does not increase");
      rows.push_back(r);
    } catch (const RowError& e) {
      throw FormatError("truth row " + std::to_string(rowno) + ": " + e.what());
    }
  }
  return rows;
}

std::vector<TruthRow> read_truth(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return read_truth(in);
}

void write_truth(std::ostream& out, const std::vector<TruthRow>& rows) {
  out << "t,px,py,pz,vx,vy,vz\n";
  for (const TruthRow& r : rows) {
    put(out, r.t);
    for (int i = 0; i < 6; ++i) {
      out << ',';
      put(out, r.x(i));
    }
    out << '\n';
  }
}

void Summary::set(const std::string& key, double value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

std::optional<double> Summary::get(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  return std::nullopt;
}

void write_summary(std::ostream& out, const Summary& s) {
  for (const auto& [k, v] : s.entries()) out << k << " = " << format_number(v) << '\n';
}

Summary read_summary(std::istream& in) {
  Summary s;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    const auto v = eq == std::string::npos ? std::nullopt : parse_double(trim(line.substr(eq + 1)));
    if (!v) throw FormatError("summary line " + std::to_string(lineno) + ": expected key = number");
    s.set(trim(line.substr(0, eq)), *v);
  }
  return s;
}

ReportRow make_row(const StepOutput& out, std::optional<Vec3> true_pos) {
  ReportRow r;
  r.t = out.t;
  r.warmup = out.warmup;
  r.x = out.estimate.mean;
  r.true_pos = true_pos;
  r.avg_trace = out.diag.avg_trace;
  r.reduced_det = out.diag.reduced_det;
  r.step_length = out.diag.step_length;
  r.w1 = out.diag.weights.w1;
  r.w2 = out.diag.weights.w2;
  r.w3 = out.diag.weights.w3;
  r.q_diag = out.Q.diagonal();
  r.r_diag = out.R.diagonal();
  r.mu_diag = out.mu.diagonal();
  return r;
}

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << "t,warmup,px,py,pz,vx,vy,vz,true_px,true_py,true_pz,sg_px,sg_py,sg_pz,"
         "avg_trace,reduced_det,step_length,w1,w2,w3,q1,q2,q3,q4,q5,q6,r1,r2,r3,r4,mu1,mu2,mu3\n";
  for (const ReportRow& r : rows) {
    put(out, r.t);
    out << ',' << (r.warmup ? 1 : 0);
    for (int i = 0; i < 6; ++i) {
      out << ',';
      put(out, r.x(i));
    }
    put(out, r.true_pos);
    put(out, r.smoothed_pos);
    for (double v : {r.avg_trace, r.reduced_det, r.step_length, r.w1, r.w2, r.w3}) {
      out << ',';
      put(out, v);
    }
    for (int i = 0; i < 6; ++i) {
      out << ',';
      put(out, r.q_diag(i));
    }
    for (int i = 0; i < 4; ++i) {
      out << ',';
      put(out, r.r_diag(i));
    }
    for (int i = 0; i < 3; ++i) {
      out << ',';
      put(out, r.mu_diag(i));
    }
    out << '\n';
  }
}

std::vector<ReportRow> read_report_csv(std::istream& in) {
  constexpr std::size_t kColumns = 33;
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty report");
  if (split(line, ',').size() != kColumns) throw FormatError("unexpected report header");

  std::vector<ReportRow> rows;
  long rowno = 1;
  while (std::getline(in, line)) {
    ++rowno;
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    try {
      if (f.size() != kColumns) throw RowError("wrong field count");
      ReportRow r;
      std::size_t c = 0;
      auto next = [&] { return field(f, c++, "value"); };
      auto next_vec3 = [&]() -> std::optional<Vec3> {
        const bool empty = f[c].empty();
        if (empty) {
          c += 3;
          return std::nullopt;
        }
        Vec3 v;
        for (int i = 0; i < 3; ++i) v(i) = next();
        return v;
      };
      r.t = next();
      r.warmup = next() != 0.0;
      for (int i = 0; i < 6; ++i) r.x(i) = next();
      r.true_pos = next_vec3();
      r.smoothed_pos = next_vec3();
      r.avg_trace = next();
      r.reduced_det = next();
      r.step_length = next();
      r.w1 = next();
      r.w2 = next();
      r.w3 = next();
      for (int i = 0; i < 6; ++i) r.q_diag(i) = next();
      for (int i = 0; i < 4; ++i) r.r_diag(i) = next();
      for (int i = 0; i < 3; ++i) r.mu_diag(i) = next();
      rows.push_back(r);
    } catch (const RowError& e) {
      throw FormatError("report row " + std::to_string(rowno) + ": " + e.what());
    }
  }
  return rows;
}

void write_run_report(const std::filesystem::path& dir, const RunReport& report) {
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / kReportFile);
  write_report_csv(csv, report.rows);
  std::ofstream sum(dir / kSummaryFile);
  write_summary(sum, report.summary);
  if (!csv || !sum) throw Error("failed writing report to " + dir.string());
}

RunReport read_run_report(const std::filesystem::path& dir) {
  RunReport r;
  std::ifstream sum = open_in(dir / kSummaryFile);
  r.summary = read_summary(sum);
  if (std::filesystem::exists(dir / kReportFile)) {
    std::ifstream csv = open_in(dir / kReportFile);
    r.rows = read_report_csv(csv);
  }
  return r;
}

void add_metrics(Summary& s, const sim::RunMetrics& m) {
  s.set("position_rmse", m.position_rmse);
  s.set("rmse_x", m.rmse_axis(0));
  s.set("rmse_y", m.rmse_axis(1));
  s.set("rmse_z", m.rmse_axis(2));
  s.set("std_x", m.std_axis(0));
  s.set("std_y", m.std_axis(1));
  s.set("std_z", m.std_axis(2));
  s.set("kld_q_diag", m.kld_q_diag);
  s.set("kld_q_full", m.kld_q_full);
  s.set("kld_r_diag", m.kld_r_diag);
  s.set("kld_r_full", m.kld_r_full);
  s.set("drag_rel_rmse", m.drag_rel_rmse);
}

}  // namespace raswe::io
