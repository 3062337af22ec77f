#include "grfest/harness/log_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace grfest {
namespace {

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& file, const std::vector<std::string>& header)
      : file_(file), out_(file, std::ios::binary) {
    if (!out_) throw LogFormatError("cannot write '" + file.string() + "'");
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }

  CsvWriter& operator<<(double v) { return field(formatDouble(v)); }
  CsvWriter& operator<<(const std::string& s) { return field(s); }
  CsvWriter& operator<<(const Eigen::VectorXd& v) {
    for (double x : v) *this << x;
    return *this;
  }
  void endRow() {
    out_ << '\n';
    first_ = true;
    if (!out_) throw LogFormatError("write failed for '" + file_.string() + "'");
  }

 private:
  CsvWriter& field(const std::string& s) {
    if (!first_) out_ << ',';
    out_ << s;
    first_ = false;
    return *this;
  }

  std::filesystem::path file_;
  std::ofstream out_;
  bool first_ = true;
};

/// Rows of one CSV file whose header must equal `expected`.
class CsvTable {
 public:
  CsvTable(const std::filesystem::path& file, const std::vector<std::string>& expected)
      : name_(file.string()) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw LogFormatError("cannot read '" + name_ + "'");
    std::string line;
    if (!std::getline(in, line)) throw LogFormatError(name_ + ": missing header");
    if (split(line) != expected) {
      std::string want;
      for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
      throw LogFormatError(name_ + ": header does not match '" + want + "'");
    }
    int row = 1;
    while (std::getline(in, line)) {
      ++row;
      if (line.empty()) continue;
      auto cells = split(line);
      if (cells.size() != expected.size())
        throw LogFormatError(name_ + ":" + std::to_string(row) + ": expected " +
                             std::to_string(expected.size()) + " fields");
      rows_.push_back(std::move(cells));
      lines_.push_back(row);
    }
  }

  std::size_t size() const { return rows_.size(); }
  const std::string& text(std::size_t r, std::size_t c) const { return rows_[r][c]; }

  double number(std::size_t r, std::size_t c) const {
    const std::string& s = rows_[r][c];
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw LogFormatError(name_ + ":" + std::to_string(lines_[r]) + ": bad number '" + s + "'");
    return v;
  }

  Eigen::VectorXd vector(std::size_t r, std::size_t c, int n) const {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = number(r, c + i);
    return v;
  }

 private:
  static std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line.back() == '\r' ? line.substr(0, line.size() - 1) : line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  }

  std::string name_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<int> lines_;
};

void append(std::vector<std::string>& h, const std::string& prefix, int n, const std::string& unit) {
  for (int i = 1; i <= n; ++i) h.push_back(prefix + std::to_string(i) + "[" + unit + "]");
}

std::vector<std::string> imuHeader() { return {"t[s]", "ax[m/s^2]", "az[m/s^2]", "w[rad/s]"}; }

std::vector<std::string> encoderHeader(int n) {
  std::vector<std::string> h{"t[s]"};
  append(h, "a", n, "rad");
  append(h, "ad", n, "rad/s");
  return h;
}

std::vector<std::string> effortHeader(int n) {
  std::vector<std::string> h{"t[s]"};
  append(h, "tau", n, "N*m");
  return h;
}

std::vector<std::string> contactHeader(int feet) {
  std::vector<std::string> h{"t[s]"};
  append(h, "c", feet, "bool");
  return h;
}

std::vector<std::string> voHeader() {
  return {"ti[s]", "tj[s]", "dx[m]", "dz[m]", "dth[rad]"};
}

std::vector<std::string> truthHeader(int n, int feet) {
  std::vector<std::string> h{"t[s]", "px[m]", "pz[m]", "th[rad]"};
  append(h, "a", n, "rad");
  h.insert(h.end(), {"vx[m/s]", "vz[m/s]", "w[rad/s]"});
  append(h, "ad", n, "rad/s");
  h.insert(h.end(), {"ddpx[m/s^2]", "ddpz[m/s^2]", "ddth[rad/s^2]"});
  append(h, "dda", n, "rad/s^2");
  append(h, "tau", n, "N*m");
  append(h, "c", feet, "bool");
  for (int i = 1; i <= feet; ++i) {
    h.push_back("fx" + std::to_string(i) + "[N]");
    h.push_back("fz" + std::to_string(i) + "[N]");
  }
  return h;
}

std::vector<std::string> estimateHeader(int dof, int feet) {
  std::vector<std::string> h{"t[s]", "px[m]", "pz[m]", "vx[m/s]", "vz[m/s]", "bax[m/s^2]",
                             "baz[m/s^2]", "mpx[kg*m/s]", "mpz[kg*m/s]", "mth[kg*m^2/s]"};
  append(h, "ma", dof - 3, "kg*m^2/s");
  for (int i = 1; i <= feet; ++i) {
    h.push_back("fx" + std::to_string(i) + "[N]");
    h.push_back("fz" + std::to_string(i) + "[N]");
  }
  h.insert(h.end(), {"status[-]", "iterations[-]", "degraded[bool]", "regularized[bool]",
                     "kkt[-]", "win_min_fz[N]", "win_max_swing_f[N]"});
  return h;
}

std::string boolText(bool b) { return b ? "1" : "0"; }

std::vector<bool> boolsFrom(const CsvTable& t, std::size_t r, std::size_t c, int n) {
  std::vector<bool> out(n);
  for (int i = 0; i < n; ++i) {
    const std::string& s = t.text(r, c + i);
    if (s != "0" && s != "1") throw LogFormatError("contact flag must be 0 or 1, got '" + s + "'");
    out[i] = s == "1";
  }
  return out;
}

int feetOf(const SensorLog& log) {
  if (!log.contacts.empty()) return static_cast<int>(log.contacts.front().contact.size());
  if (!log.truth.empty()) return static_cast<int>(log.truth.front().contact.size());
  return 0;
}

int jointsOf(const SensorLog& log) {
  if (!log.encoders.empty()) return static_cast<int>(log.encoders.front().position.size());
  if (!log.truth.empty()) return static_cast<int>(log.truth.front().state.q.size()) - 3;
  return 0;
}

}  // namespace

std::string formatDouble(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void writeTruth(const std::filesystem::path& file, const std::vector<SimState>& truth) {
  const int n = truth.empty() ? 0 : static_cast<int>(truth.front().state.q.size()) - 3;
  const int feet = truth.empty() ? 0 : static_cast<int>(truth.front().contact.size());
  CsvWriter w(file, truthHeader(n, feet));
  for (const SimState& s : truth) {
    w << s.time << s.state.q << s.state.qdot << s.qddot << s.torques;
    for (bool c : s.contact) w << boolText(c);
    for (const auto& f : s.grf) w << f.x() << f.y();
    w.endRow();
  }
}

std::vector<SimState> readTruth(const std::filesystem::path& file, const RobotModel& model) {
  const int n = model.numJoints(), dof = model.dof(), feet = model.numFeet();
  CsvTable t(file, truthHeader(n, feet));
  std::vector<SimState> truth(t.size());
  for (std::size_t r = 0; r < t.size(); ++r) {
    SimState& s = truth[r];
    s.time = t.number(r, 0);
    s.state.q = t.vector(r, 1, dof);
    s.state.qdot = t.vector(r, 1 + dof, dof);
    s.qddot = t.vector(r, 1 + 2 * dof, dof);
    s.torques = t.vector(r, 1 + 3 * dof, n);
    s.contact = boolsFrom(t, r, 1 + 3 * dof + n, feet);
    for (int i = 0; i < feet; ++i)
      s.grf.push_back(t.vector(r, 1 + 3 * dof + n + feet + 2 * i, 2));
  }
  return truth;
}

void writeSensorLog(const std::filesystem::path& dir, const SensorLog& log) {
  std::filesystem::create_directories(dir);
  const int n = jointsOf(log), feet = feetOf(log);
  {
    CsvWriter w(dir / "imu.csv", imuHeader());
    for (const auto& s : log.imu) {
      w << s.t << s.accel.x() << s.accel.y() << s.gyro;
      w.endRow();
    }
  }
  {
    CsvWriter w(dir / "encoders.csv", encoderHeader(n));
    for (const auto& s : log.encoders) {
      w << s.t << s.position << s.velocity;
      w.endRow();
    }
  }
  {
    CsvWriter w(dir / "effort.csv", effortHeader(n));
    for (const auto& s : log.efforts) {
      w << s.t << s.torque;
      w.endRow();
    }
  }
  {
    CsvWriter w(dir / "contacts.csv", contactHeader(feet));
    for (const auto& s : log.contacts) {
      w << s.t;
      for (bool c : s.contact) w << boolText(c);
      w.endRow();
    }
  }
  {
    CsvWriter w(dir / "vo.csv", voHeader());
    for (const auto& s : log.vo) {
      w << s.t_i << s.t_j << s.translation.x() << s.translation.y() << s.rotation;
      w.endRow();
    }
  }
  writeTruth(dir / "truth.csv", log.truth);
}

SensorLog readSensorLog(const std::filesystem::path& dir, const RobotModel& model) {
  const int n = model.numJoints(), feet = model.numFeet();
  SensorLog log;
  {
    CsvTable t(dir / "imu.csv", imuHeader());
    for (std::size_t r = 0; r < t.size(); ++r)
      log.imu.push_back({t.number(r, 0), t.vector(r, 1, 2), t.number(r, 3)});
  }
  {
    CsvTable t(dir / "encoders.csv", encoderHeader(n));
    for (std::size_t r = 0; r < t.size(); ++r)
      log.encoders.push_back({t.number(r, 0), t.vector(r, 1, n), t.vector(r, 1 + n, n)});
  }
  {
    CsvTable t(dir / "effort.csv", effortHeader(n));
    for (std::size_t r = 0; r < t.size(); ++r)
      log.efforts.push_back({t.number(r, 0), t.vector(r, 1, n)});
  }
  {
    CsvTable t(dir / "contacts.csv", contactHeader(feet));
    for (std::size_t r = 0; r < t.size(); ++r)
      log.contacts.push_back({t.number(r, 0), boolsFrom(t, r, 1, feet)});
  }
  {
    CsvTable t(dir / "vo.csv", voHeader());
    for (std::size_t r = 0; r < t.size(); ++r)
      log.vo.push_back({t.number(r, 0), t.number(r, 1), t.vector(r, 2, 2), t.number(r, 4)});
  }
  log.truth = readTruth(dir / "truth.csv", model);
  const std::size_t N = log.imu.size();
  if (log.encoders.size() != N || log.efforts.size() != N || log.contacts.size() != N)
    throw LogFormatError(dir.string() + ": sensor streams of unequal length");
  return log;
}

void writeEstimates(const std::filesystem::path& file, const std::vector<EstimateOut>& trace) {
  const int dof = trace.empty() ? 3 : static_cast<int>(trace.front().state.m.size());
  const int feet = trace.empty() ? 0 : static_cast<int>(trace.front().state.f.size());
  CsvWriter w(file, estimateHeader(dof, feet));
  for (const EstimateOut& e : trace) {
    w << e.t << e.state.p.x() << e.state.p.y() << e.state.v.x() << e.state.v.y()
      << e.state.b_a.x() << e.state.b_a.y() << e.state.m;
    for (const auto& f : e.state.f) w << f.x() << f.y();
    w << e.status << std::to_string(e.iterations) << boolText(e.degraded)
      << boolText(e.arrival_regularized) << e.kkt_residual << e.window_min_normal_force
      << e.window_max_swing_force;
    w.endRow();
  }
}

std::vector<EstimateOut> readEstimates(const std::filesystem::path& file, const RobotModel& model) {
  const int dof = model.dof(), feet = model.numFeet();
  CsvTable t(file, estimateHeader(dof, feet));
  std::vector<EstimateOut> trace(t.size());
  for (std::size_t r = 0; r < t.size(); ++r) {
    EstimateOut& e = trace[r];
    e.t = t.number(r, 0);
    e.state.p = t.vector(r, 1, 2);
    e.state.v = t.vector(r, 3, 2);
    e.state.b_a = t.vector(r, 5, 2);
    e.state.m = t.vector(r, 7, dof);
    std::size_t c = 7 + dof;
    for (int i = 0; i < feet; ++i, c += 2) e.state.f.push_back(t.vector(r, c, 2));
    e.status = t.text(r, c);
    e.iterations = static_cast<int>(t.number(r, c + 1));
    e.degraded = boolsFrom(t, r, c + 2, 1)[0];
    e.arrival_regularized = boolsFrom(t, r, c + 3, 1)[0];
    e.kkt_residual = t.number(r, c + 4);
    e.window_min_normal_force = t.number(r, c + 5);
    e.window_max_swing_force = t.number(r, c + 6);
  }
  return trace;
}

void writeTiming(const std::filesystem::path& file, const std::vector<EstimateOut>& trace) {
  CsvWriter w(file, {"t[s]", "solve[ms]"});
  for (const EstimateOut& e : trace) {
    w << e.t << e.solve_time_ms;
    w.endRow();
  }
}

void readTiming(const std::filesystem::path& file, std::vector<EstimateOut>& trace) {
  CsvTable t(file, {"t[s]", "solve[ms]"});
  if (t.size() != trace.size())
    throw LogFormatError(file.string() + ": timing rows do not match the estimate trace");
  for (std::size_t r = 0; r < t.size(); ++r) {
    if (t.number(r, 0) != trace[r].t)
      throw LogFormatError(file.string() + ": timestamps do not match the estimate trace");
    trace[r].solve_time_ms = t.number(r, 1);
  }
}

}  // namespace grfest
