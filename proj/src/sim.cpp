#include "sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "errors.hpp"
#include "text.hpp"

namespace distpd {

void Reference::validate() const {
  require(std::isfinite(offset) && std::isfinite(amplitude),
          "reference: non-finite offset/amplitude");
  switch (kind) {
    case ReferenceKind::kStep:
      require(std::isfinite(step_time), "reference: non-finite step_time");
      break;
    case ReferenceKind::kSinusoid:
    case ReferenceKind::kKnee:
      require(std::isfinite(frequency_hz) && frequency_hz >= 0.0,
              "reference: frequency must be >= 0");
      break;
    case ReferenceKind::kTabulated:
      require(!table_t.empty() && table_t.size() == table_x.size(),
              "reference: table_t and table_x must be non-empty and equal "
              "length");
      require(std::is_sorted(table_t.begin(), table_t.end()) &&
                  std::adjacent_find(table_t.begin(), table_t.end()) ==
                      table_t.end(),
              "reference: table_t must be strictly increasing");
      break;
  }
}

RefSample Reference::sample(double t) const {
  switch (kind) {
    case ReferenceKind::kStep:
      return {t >= step_time ? offset + amplitude : offset, 0.0};
    case ReferenceKind::kSinusoid:
    case ReferenceKind::kKnee: {
      const double w = 2.0 * kPi * frequency_hz;
      return {offset + amplitude * std::sin(w * t),
              amplitude * w * std::cos(w * t)};
    }
    case ReferenceKind::kTabulated: {
      if (t <= table_t.front()) return {table_x.front(), 0.0};
      if (t >= table_t.back()) return {table_x.back(), 0.0};
      const auto it = std::upper_bound(table_t.begin(), table_t.end(), t);
      const std::size_t i = static_cast<std::size_t>(it - table_t.begin());
      const double t0 = table_t[i - 1], t1 = table_t[i];
      const double x0 = table_x[i - 1], x1 = table_x[i];
      const double slope = (x1 - x0) / (t1 - t0);
      return {x0 + slope * (t - t0), slope};
    }
  }
  return {};
}

double Reference::span() const {
  switch (kind) {
    case ReferenceKind::kStep:
      return std::abs(amplitude);
    case ReferenceKind::kSinusoid:
    case ReferenceKind::kKnee:
      return frequency_hz > 0.0 ? 2.0 * std::abs(amplitude) : 0.0;
    case ReferenceKind::kTabulated: {
      const auto [lo, hi] = std::minmax_element(table_x.begin(), table_x.end());
      return *hi - *lo;
    }
  }
  return 0.0;
}

double Reference::period() const {
  if ((kind == ReferenceKind::kSinusoid || kind == ReferenceKind::kKnee) &&
      frequency_hz > 0.0)
    return 1.0 / frequency_hz;
  return 0.0;
}

double Disturbance::eval(double /*t*/, double x) const {
  switch (kind) {
    case DisturbanceKind::kNone:
      return 0.0;
    case DisturbanceKind::kConstant:
      return force;
    case DisturbanceKind::kGravityArm:
      return -load_mass * gravity * arm_length * std::sin(x + pivot_offset);
  }
  return 0.0;
}

void SimScenario::validate() const {
  sys.actuator.validate();
  if (!zero_gains) sys.controller.validate();
  const auto& c = sys.controller;
  require(c.Ts >= 0.0 && c.Td >= 0.0 && c.tau_v >= 0.0,
          "scenario: delays and tau_v must be >= 0");
  require(std::isfinite(dt_base) && dt_base > 0.0, "scenario: dt_base must be > 0");
  require(std::isfinite(duration) && duration > 0.0,
          "scenario: duration must be > 0");
  require(rate_s >= 0.0 && rate_d >= 0.0, "scenario: servo periods must be >= 0");
  require(std::isfinite(x0) && std::isfinite(v0), "scenario: non-finite x0/v0");
  require(divergence_bound >= 0.0, "scenario: divergence_bound must be >= 0");
  reference.validate();
}

namespace {

RoundedQuantity round_ticks(const char* name, double value, double dt,
                            long min_ticks) {
  RoundedQuantity q;
  q.requested = value;
  q.ticks = std::max(min_ticks, std::lround(value / dt));
  q.applied = q.ticks * dt;
  const double err = std::abs(q.applied - value);
  if (value > 0.0 && err > 0.1 * value) {
    throw Error(ErrorCode::kDtTooCoarse,
                std::string("dt_base too coarse: ") + name + "=" + num(value) +
                    " rounds to " + num(q.applied));
  }
  return q;
}

// History of the last delay+1 samples indexed by absolute tick; reads before
// tick 0 return the prefill (initial state).
class DelayLine {
 public:
  DelayLine(long delay_ticks, double prefill)
      : buf_(static_cast<std::size_t>(delay_ticks) + 1, prefill),
        delay_(delay_ticks),
        prefill_(prefill) {}

  void push(long tick, double v) { buf_[index(tick)] = v; }

  double delayed(long tick) const {
    const long src = tick - delay_;
    return src < 0 ? prefill_ : buf_[index(src)];
  }

 private:
  std::size_t index(long tick) const {
    return static_cast<std::size_t>(tick % static_cast<long>(buf_.size()));
  }

  std::vector<double> buf_;
  long delay_;
  double prefill_;
};

}  // namespace

RoundingReport round_to_grid(const SimScenario& s) {
  const double dt = s.dt_base;
  RoundingReport r;
  r.ts = round_ticks("Ts", s.sys.controller.Ts, dt, 0);
  r.td = round_ticks("Td", s.sys.controller.Td, dt, 0);
  r.rate_s = round_ticks("rate_s", s.rate_s > 0.0 ? s.rate_s : dt, dt, 1);
  r.rate_d = round_ticks("rate_d", s.rate_d > 0.0 ? s.rate_d : dt, dt, 1);
  r.duration = round_ticks("duration", s.duration, dt, 1);
  return r;
}

SimTrace simulate(const SimScenario& s) {
  s.validate();
  SimTrace trace;
  trace.rounding = round_to_grid(s);
  const auto& rr = trace.rounding;

  const auto& a = s.sys.actuator;
  const double K = s.zero_gains ? 0.0 : s.sys.controller.K;
  const double B = s.zero_gains ? 0.0 : s.sys.controller.B;
  const double tau_v = s.sys.controller.tau_v;
  const double dt = s.dt_base;
  // Exact pole match of the continuous low pass at the sample instants.
  const double filt = tau_v > 0.0 ? std::exp(-dt / tau_v) : 0.0;

  double bound = s.divergence_bound;
  if (bound == 0.0) {
    const double span = s.reference.span();
    const double initial = std::abs(s.x0 - s.reference.sample(0.0).x);
    bound = span > 0.0      ? 100.0 * span
            : initial > 0.0 ? 100.0 * initial
                            : std::numeric_limits<double>::infinity();
  }
  const double period = s.reference.period();
  trace.steady_start = period;

  DelayLine pos_line(rr.ts.ticks, s.x0);
  DelayLine vel_line(rr.td.ticks, s.v0);

  const long steps = rr.duration.ticks;
  const std::size_t cap = static_cast<std::size_t>(steps) + 1;
  for (auto* v : {&trace.t, &trace.x, &trace.xdot, &trace.x_d, &trace.xdot_d,
                  &trace.f_cmd, &trace.i_m, &trace.f_dist})
    v->reserve(cap);

  double x = s.x0, v = s.v0, v_filt = s.v0;
  double held_x = s.x0, held_v = s.v0;
  auto accel = [&](double t, double px, double pv, double force) {
    return (force + s.disturbance.eval(t, px) - a.b * pv) / a.m;
  };

  for (long k = 0; k <= steps; ++k) {
    const double t = k * dt;
    if (k > 0) v_filt = filt * v_filt + (1.0 - filt) * v;
    pos_line.push(k, x);
    vel_line.push(k, v_filt);
    if (k % rr.rate_s.ticks == 0) held_x = pos_line.delayed(k);
    if (k % rr.rate_d.ticks == 0) held_v = vel_line.delayed(k);

    const RefSample ref = s.reference.sample(t);
    const double f_cmd = K * (ref.x - held_x) + B * (ref.xdot - held_v);
    const double i_m = f_cmd / a.nu;
    const double force = a.nu * i_m;

    trace.t.push_back(t);
    trace.x.push_back(x);
    trace.xdot.push_back(v);
    trace.x_d.push_back(ref.x);
    trace.xdot_d.push_back(ref.xdot);
    trace.f_cmd.push_back(f_cmd);
    trace.i_m.push_back(i_m);
    trace.f_dist.push_back(s.disturbance.eval(t, x));

    if (!std::isfinite(x) || std::abs(x - ref.x) > bound) {
      trace.termination = Termination::kDiverged;
      trace.diverged_at = t;
      break;
    }
    if (k == steps) break;

    // Classic RK4 with the command held over the base step.
    const double h = dt;
    const double k1x = v, k1v = accel(t, x, v, force);
    const double k2x = v + 0.5 * h * k1v,
                 k2v = accel(t + 0.5 * h, x + 0.5 * h * k1x, k2x, force);
    const double k3x = v + 0.5 * h * k2v,
                 k3v = accel(t + 0.5 * h, x + 0.5 * h * k2x, k3x, force);
    const double k4x = v + h * k3v,
                 k4v = accel(t + h, x + h * k3x, k4x, force);
    x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  }
  return trace;
}

std::string SimTrace::csv(std::size_t stride) const {
  if (stride == 0) stride = 1;
  std::ostringstream out;
  out << "t,x,xdot,x_d,xdot_d,f_cmd,i_m,f_dist\n";
  for (std::size_t i = 0; i < size(); i += stride) {
    out << num(t[i]) << ',' << num(x[i]) << ',' << num(xdot[i]) << ','
        << num(x_d[i]) << ',' << num(xdot_d[i]) << ',' << num(f_cmd[i]) << ','
        << num(i_m[i]) << ',' << num(f_dist[i]) << '\n';
  }
  return out.str();
}

SimScenario step_scenario(const LoopSystem& sys, double amplitude,
                          double duration) {
  SimScenario s;
  s.sys = sys;
  s.duration = duration;
  s.reference.kind = ReferenceKind::kStep;
  s.reference.amplitude = amplitude;
  return s;
}

SimScenario knee_scenario(const LoopSystem& sys, double load_mass,
                          double duration) {
  require(load_mass > 0.0, "knee_scenario: load mass must be > 0");
  const double deg = kPi / 180.0;
  SimScenario s;
  s.sys = sys;
  s.duration = duration;
  Reference& r = s.reference;
  r.kind = ReferenceKind::kKnee;
  r.offset = kKneeCenterDeg * deg;
  r.amplitude = kKneeAmplitudeDeg * deg;
  r.frequency_hz = kKneePeakVelocity / (2.0 * kPi * r.amplitude);

  // Largest |sin| over the swept range (the range may include 90 deg).
  const double lo = r.offset - r.amplitude, hi = r.offset + r.amplitude;
  double peak_sin = std::max(std::abs(std::sin(lo)), std::abs(std::sin(hi)));
  const double first_peak = std::ceil((lo - 0.5 * kPi) / kPi) * kPi + 0.5 * kPi;
  if (first_peak <= hi) peak_sin = 1.0;

  Disturbance& d = s.disturbance;
  d.kind = DisturbanceKind::kGravityArm;
  d.load_mass = load_mass;
  d.arm_length = kKneePeakDisturbance / (load_mass * d.gravity * peak_sin);

  const RefSample start = r.sample(0.0);
  s.x0 = start.x;
  s.v0 = start.xdot;
  return s;
}

const char* to_string(StabilityKind kind) {
  switch (kind) {
    case StabilityKind::kStable:
      return "stable";
    case StabilityKind::kMarginal:
      return "marginal";
    case StabilityKind::kDivergent:
      return "divergent";
  }
  return "unknown";
}

StabilityClass classify_stability(const SimTrace& trace, const Reference& ref) {
  StabilityClass c;
  if (trace.diverged()) {
    c.kind = StabilityKind::kDivergent;
    return c;
  }
  require(trace.size() > 0, "classify_stability: empty trace");
  const double amp = ref.span();
  const double band = amp > 0.0 ? 0.02 * amp : 1e-12;
  const double t_end = trace.t.back();

  std::optional<std::size_t> last_out;
  for (std::size_t i = trace.size(); i-- > 0;) {
    if (std::abs(trace.x[i] - trace.x_d[i]) > band) {
      last_out = i;
      break;
    }
  }
  const double settle =
      !last_out ? trace.t.front()
      : *last_out + 1 < trace.size() ? trace.t[*last_out + 1]
                                     : std::numeric_limits<double>::infinity();
  // The final 10% of the run must sit inside the band.
  if (settle <= trace.t.front() + 0.9 * (t_end - trace.t.front())) {
    c.kind = StabilityKind::kStable;
    c.settling_time = settle - trace.t.front();
  } else {
    c.kind = StabilityKind::kMarginal;
  }

  if (ref.kind == ReferenceKind::kStep && ref.amplitude != 0.0) {
    const double target = ref.offset + ref.amplitude;
    const double dir = ref.amplitude > 0.0 ? 1.0 : -1.0;
    double peak = 0.0;
    for (double xi : trace.x) peak = std::max(peak, dir * (xi - target));
    c.overshoot = peak / std::abs(ref.amplitude);
  }
  return c;
}

RmsError rms_error(const SimTrace& trace) {
  if (trace.diverged()) {
    throw Error(ErrorCode::kDiverged,
                "rms_error: trace diverged at t=" + num(trace.diverged_at));
  }
  double sp = 0.0, sv = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace.t[i] < trace.steady_start) continue;
    const double ep = trace.x[i] - trace.x_d[i];
    const double ev = trace.xdot[i] - trace.xdot_d[i];
    sp += ep * ep;
    sv += ev * ev;
    ++n;
  }
  require(n > 0, "rms_error: steady window is empty", ErrorCode::kInvalidArgument);
  return {std::sqrt(sp / n), std::sqrt(sv / n)};
}

}  // namespace distpd
