#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core.hpp"

namespace distpd {

enum class ReferenceKind { kStep, kSinusoid, kKnee, kTabulated };

struct RefSample {
  double x = 0.0;
  double xdot = 0.0;
};

/// Desired trajectory x_D(t), xdot_D(t).
///  step:       offset for t < step_time, offset + amplitude afterwards, xdot = 0
///  sinusoid:   offset + amplitude * sin(2 pi f t)  (knee uses the same form)
///  tabulated:  piecewise linear through (table_t, table_x), held at the ends
struct Reference {
  ReferenceKind kind = ReferenceKind::kStep;
  double offset = 0.0;
  double amplitude = 0.0;
  double frequency_hz = 0.0;
  double step_time = 0.0;
  std::vector<double> table_t;
  std::vector<double> table_x;

  void validate() const;
  RefSample sample(double t) const;
  // Peak-to-peak extent (step: |amplitude|).
  double span() const;
  // Period of a periodic reference, 0 otherwise.
  double period() const;
};

enum class DisturbanceKind { kNone, kConstant, kGravityArm };

/// Load force F_d(t, x) entering between controller and plant.
/// gravity arm: -load_mass * gravity * arm_length * sin(x + pivot_offset).
struct Disturbance {
  DisturbanceKind kind = DisturbanceKind::kNone;
  double force = 0.0;
  double load_mass = 0.0;
  double arm_length = 0.0;
  double pivot_offset = 0.0;
  double gravity = 9.81;

  double eval(double t, double x) const;
};

struct SimScenario {
  LoopSystem sys;
  bool zero_gains = false;  // run the plant open loop (K = B = 0)
  double dt_base = 1e-4;
  double rate_s = 0.0;  // stiffness servo period, 0 means dt_base
  double rate_d = 0.0;  // damping servo period, 0 means dt_base
  double duration = 1.0;
  Reference reference;
  Disturbance disturbance;
  double x0 = 0.0;
  double v0 = 0.0;
  // |x - x_D| beyond this halts the run. 0 selects 100x the reference span
  // (or 100x the initial error for a constant reference).
  double divergence_bound = 0.0;

  void validate() const;
};

struct RoundedQuantity {
  double requested = 0.0;
  long ticks = 0;
  double applied = 0.0;
};

struct RoundingReport {
  RoundedQuantity ts, td, rate_s, rate_d, duration;
};

// Snaps delays and servo periods to whole dt_base ticks. Throws
// kDtTooCoarse when any value moves by more than 10%.
RoundingReport round_to_grid(const SimScenario& scenario);

enum class Termination { kCompleted, kDiverged };

struct SimTrace {
  std::vector<double> t, x, xdot, x_d, xdot_d, f_cmd, i_m, f_dist;
  Termination termination = Termination::kCompleted;
  double diverged_at = 0.0;
  double steady_start = 0.0;  // start of the window used for RMS metrics
  RoundingReport rounding;

  std::size_t size() const { return t.size(); }
  bool diverged() const { return termination == Termination::kDiverged; }
  std::string csv(std::size_t stride = 1) const;
};

SimTrace simulate(const SimScenario& scenario);

SimScenario step_scenario(const LoopSystem& sys, double amplitude,
                          double duration);

// Knee-like periodic reference: 106 deg +/- 20 deg with peak speed 2.5 rad/s,
// and a gravity-arm disturbance whose peak over that range is 16.84 N*m.
inline constexpr double kKneeCenterDeg = 106.0;
inline constexpr double kKneeAmplitudeDeg = 20.0;
inline constexpr double kKneePeakVelocity = 2.5;
inline constexpr double kKneePeakDisturbance = 16.84;
SimScenario knee_scenario(const LoopSystem& sys, double load_mass,
                          double duration);

enum class StabilityKind { kStable, kMarginal, kDivergent };
const char* to_string(StabilityKind kind);

struct StabilityClass {
  StabilityKind kind = StabilityKind::kStable;
  std::optional<double> overshoot;      // fraction of the step amplitude
  std::optional<double> settling_time;  // 2% band, seconds
};

StabilityClass classify_stability(const SimTrace& trace, const Reference& ref);

struct RmsError {
  double position = 0.0;
  double velocity = 0.0;
};

// RMS of x - x_D and xdot - xdot_D for t >= trace.steady_start. Throws
// kDiverged for a diverged trace.
RmsError rms_error(const SimTrace& trace);

// Flat key = value scenario description. Keys mirror SimScenario; keys
// ending in _deg are degrees and converted to radians.
SimScenario parse_scenario(const std::string& text);

}  // namespace distpd
