#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

namespace distpd {

/// Three-wheel omnidirectional base. Wheel i sits at mounting angle phi_i on
/// a circle of radius mount_radius and rolls tangentially.
struct BaseGeometry {
  double mount_radius = 0.2;    // m
  double wheel_radius = 0.05;   // m
  std::array<double, 3> wheel_angles{1.5707963267948966, 3.6651914291880923,
                                     5.7595865315812871};  // 90/210/330 deg
  double mass = 20.0;           // kg
  double yaw_inertia = 0.4;     // kg m^2
  double wheel_damping = 0.1;   // N m s / rad, passive, per wheel

  void validate() const;
};

// Rows [-sin(phi_i), cos(phi_i), R] / r: body twist (vx, vy, wz) -> wheel
// angular speeds. Throws kSingular for duplicate wheel angles.
Eigen::Matrix3d wheel_jacobian(const BaseGeometry& geom);

enum class Architecture { kCentralized, kDistributed };  // COSC, DOSC
const char* to_string(Architecture a);

struct ArchitectureConfig {
  Architecture kind = Architecture::kCentralized;
  Eigen::Vector3d cartesian_stiffness = Eigen::Vector3d::Zero();  // x, y, yaw
  Eigen::Vector3d cartesian_damping = Eigen::Vector3d::Zero();    // COSC only
  double joint_damping = 0.0;                                     // DOSC only
  double highlevel_delay = 0.022;   // s, transport delay on Cartesian feedback
  double highlevel_period = 0.001;  // s, centralized servo period
  double embedded_period = 0.0005;  // s, wheel servo period (and its delay)
  double velocity_filter_tau = 0.0032;

  void validate() const;

  // Gains scaled by the rigid-body inertia so that one number sets all axes:
  // stiffness k (N/(m kg)) -> (k M, k M, k I), damping d (1/s) likewise.
  static ArchitectureConfig normalized(Architecture kind,
                                       const BaseGeometry& geom,
                                       double stiffness_per_mass,
                                       double damping, double joint_damping);
};

struct CircleTrajectory {
  double radius = 0.0;
  double period = 1.0;
  double heading = 0.0;

  void validate() const;
  // Pose (x, y, theta) starting at the origin and circling counter-clockwise.
  Eigen::Vector3d pose(double t) const;
  Eigen::Vector3d velocity(double t) const;
};

CircleTrajectory circle_trajectory(double radius, double period);

struct BaseTrace {
  std::vector<double> t;
  std::vector<Eigen::Vector3d> pose, pose_ref, velocity, velocity_ref,
      wheel_speed, wheel_torque, odometry;
  bool diverged = false;
  double diverged_at = 0.0;
  bool vibration = false;

  std::size_t size() const { return t.size(); }
  std::string csv(std::size_t stride = 1) const;
};

struct BaseSimOptions {
  double dt = 1e-4;
  std::size_t record_stride = 1;
  // Added to the initial world velocity (x, y, yaw rate).
  Eigen::Vector3d initial_velocity_offset = Eigen::Vector3d::Zero();
  double divergence_bound = 1.0;  // m (and rad) of pose error
};

BaseTrace simulate_base(const BaseGeometry& geom,
                        const ArchitectureConfig& arch,
                        const CircleTrajectory& trajectory, double duration,
                        const BaseSimOptions& options = {});

struct TrackingError {
  double position_rms = 0.0;  // m, planar
  double velocity_rms = 0.0;  // m/s, planar
};

// RMS over t >= discard (typically one trajectory period).
TrackingError tracking_error(const BaseTrace& trace, double discard);

/// Sustained-oscillation detector applied to the difference between a
/// perturbed and an unperturbed run (the homogeneous response). Vibrating
/// when the run diverges, or when in the final window_fraction of the run
/// some body velocity component crosses zero at least min_zero_crossings
/// times and its envelope over the last half of the window is at least
/// decay_ratio times that of the first half (and above floor).
struct VibrationDetector {
  double window_fraction = 0.25;
  double decay_ratio = 0.8;
  int min_zero_crossings = 4;
  double floor = 1e-7;  // m/s
};

struct StiffnessSearch {
  double duration = 6.0;
  Eigen::Vector3d perturbation{0.05, 0.05, 0.25};
  double relative_tolerance = 0.01;
  double initial_damping = 1.0;    // first upper probe (1/s or N m s/rad)
  double initial_stiffness = 10.0; // first upper probe, N/(m kg)
  int max_doublings = 30;
  VibrationDetector detector;
  BaseSimOptions sim;
};

struct StiffnessResult {
  double stiffness = 0.0;      // K*, N/(m kg): largest non-vibrating
  double stiffness_hi = 0.0;   // smallest vibrating probe
  double damping = 0.0;        // selected damping (1/s COSC, N m s/rad DOSC)
  double damping_hi = 0.0;
  bool inconclusive = false;
  std::string note;
  int simulations = 0;
};

bool vibrates(const BaseGeometry& geom, const ArchitectureConfig& arch,
              const CircleTrajectory& trajectory,
              const StiffnessSearch& search);

// Tuning procedure: with zero stiffness raise damping to the largest
// non-vibrating value, then raise stiffness the same way.
StiffnessResult max_stable_stiffness(const BaseGeometry& geom,
                                     Architecture kind,
                                     const CircleTrajectory& trajectory,
                                     const ArchitectureConfig& base_config = {},
                                     const StiffnessSearch& search = {});

}  // namespace distpd
