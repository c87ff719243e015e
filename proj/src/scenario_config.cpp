#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "errors.hpp"
#include "sim.hpp"

namespace distpd {

namespace {

constexpr double kDeg = kPi / 180.0;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || trim(value.substr(used)) != "" || !std::isfinite(v))
    throw Error(ErrorCode::kConfig,
                "scenario key '" + key + "': not a number: '" + value + "'");
  return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw Error(ErrorCode::kConfig,
              "scenario key '" + key + "': expected true/false, got '" + value + "'");
}

}  // namespace

SimScenario parse_scenario(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::kConfig,
                  "scenario line " + std::to_string(lineno) + ": expected key = value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  SimScenario s;
  std::optional<double> f_n;
  std::optional<double> disturbance_peak;
  std::string reference = "step", disturbance = "none";
  auto& c = s.sys.controller;
  auto& r = s.reference;
  auto& d = s.disturbance;
  double knee_center = kKneeCenterDeg * kDeg;
  double knee_amplitude = kKneeAmplitudeDeg * kDeg;
  double knee_peak_velocity = kKneePeakVelocity;

  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto num = [](double& dst, double scale = 1.0) -> Setter {
    return [&dst, scale](const std::string& k, const std::string& v) {
      dst = parse_double(k, v) * scale;
    };
  };
  auto list = [](std::vector<double>& dst, double scale = 1.0) -> Setter {
    return [&dst, scale](const std::string& k, const std::string& v) {
      dst = parse_list(k, v);
      for (double& x : dst) x *= scale;
    };
  };

  const std::map<std::string, Setter> setters = {
      {"m", num(s.sys.actuator.m)},
      {"b", num(s.sys.actuator.b)},
      {"nu", num(s.sys.actuator.nu)},
      {"K", num(c.K)},
      {"B", num(c.B)},
      {"f_n", [&](const std::string& k, const std::string& v) { f_n = parse_double(k, v); }},
      {"Ts", num(c.Ts)},
      {"Td", num(c.Td)},
      {"tau_v", num(c.tau_v)},
      {"zero_gains", [&](const std::string& k, const std::string& v) { s.zero_gains = parse_bool(k, v); }},
      {"dt_base", num(s.dt_base)},
      {"rate_s", num(s.rate_s)},
      {"rate_d", num(s.rate_d)},
      {"duration", num(s.duration)},
      {"reference", [&](const std::string&, const std::string& v) { reference = v; }},
      {"ref_offset", num(r.offset)},
      {"ref_offset_deg", num(r.offset, kDeg)},
      {"ref_amplitude", num(r.amplitude)},
      {"ref_amplitude_deg", num(r.amplitude, kDeg)},
      {"ref_frequency_hz", num(r.frequency_hz)},
      {"step_time", num(r.step_time)},
      {"knee_center_deg", num(knee_center, kDeg)},
      {"knee_amplitude_deg", num(knee_amplitude, kDeg)},
      {"knee_peak_velocity", num(knee_peak_velocity)},
      {"table_t", list(r.table_t)},
      {"table_x", list(r.table_x)},
      {"table_x_deg", list(r.table_x, kDeg)},
      {"disturbance", [&](const std::string&, const std::string& v) { disturbance = v; }},
      {"dist_force", num(d.force)},
      {"load_mass", num(d.load_mass)},
      {"arm_length", num(d.arm_length)},
      {"pivot_offset_deg", num(d.pivot_offset, kDeg)},
      {"gravity", num(d.gravity)},
      {"disturbance_peak", [&](const std::string& k, const std::string& v) { disturbance_peak = parse_double(k, v); }},
      {"x0", num(s.x0)},
      {"x0_deg", num(s.x0, kDeg)},
      {"v0", num(s.v0)},
      {"v0_deg", num(s.v0, kDeg)},
      {"divergence_bound", num(s.divergence_bound)},
  };

  for (const auto& [key, value] : kv) {
    const auto it = setters.find(key);
    if (it == setters.end())
      throw Error(ErrorCode::kConfig, "unknown scenario key '" + key + "'");
    it->second(key, value);
  }

  if (f_n) {
    const Gains g = critical_gains(s.sys.actuator.m, s.sys.actuator.b, *f_n);
    c.K = g.K;
    c.B = g.B;
  }

  if (reference == "step") {
    r.kind = ReferenceKind::kStep;
  } else if (reference == "sinusoid") {
    r.kind = ReferenceKind::kSinusoid;
  } else if (reference == "knee") {
    r.kind = ReferenceKind::kKnee;
    r.offset = knee_center;
    r.amplitude = knee_amplitude;
    require(knee_amplitude > 0.0, "knee_amplitude_deg must be > 0",
            ErrorCode::kConfig);
    r.frequency_hz = knee_peak_velocity / (2.0 * kPi * knee_amplitude);
    if (!kv.count("x0") && !kv.count("x0_deg")) s.x0 = r.sample(0.0).x;
    if (!kv.count("v0") && !kv.count("v0_deg")) s.v0 = r.sample(0.0).xdot;
  } else if (reference == "tabulated") {
    r.kind = ReferenceKind::kTabulated;
  } else {
    throw Error(ErrorCode::kConfig, "unknown reference kind '" + reference + "'");
  }

  if (disturbance == "none") {
    d.kind = DisturbanceKind::kNone;
  } else if (disturbance == "constant") {
    d.kind = DisturbanceKind::kConstant;
  } else if (disturbance == "gravity_arm") {
    d.kind = DisturbanceKind::kGravityArm;
    if (disturbance_peak) {
      require(d.load_mass > 0.0, "disturbance_peak needs load_mass > 0",
              ErrorCode::kConfig);
      // Scale the arm so the peak over the reference swing equals the target.
      double peak_sin = 0.0;
      const double lo = r.offset - std::abs(r.amplitude);
      const double hi = r.offset + std::abs(r.amplitude);
      for (int i = 0; i <= 10000; ++i) {
        const double x = lo + (hi - lo) * i / 10000.0;
        peak_sin = std::max(peak_sin, std::abs(std::sin(x + d.pivot_offset)));
      }
      require(peak_sin > 0.0, "disturbance_peak: arm never loaded",
              ErrorCode::kConfig);
      d.arm_length = *disturbance_peak / (d.load_mass * d.gravity * peak_sin);
    }
  } else {
    throw Error(ErrorCode::kConfig, "unknown disturbance kind '" + disturbance + "'");
  }

  s.validate();
  return s;
}

}  // namespace distpd
