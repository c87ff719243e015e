#include "base.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "core.hpp"
#include "errors.hpp"
#include "text.hpp"

namespace distpd {

namespace {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

Mat3 yaw_rotation(double theta) {
  Mat3 r = Mat3::Identity();
  const double c = std::cos(theta), s = std::sin(theta);
  r(0, 0) = c;
  r(0, 1) = -s;
  r(1, 0) = s;
  r(1, 1) = c;
  return r;
}

// Full state in the world frame: pose, velocity, odometry pose.
struct BaseState {
  Vec3 pose = Vec3::Zero();
  Vec3 vel = Vec3::Zero();
  Vec3 odom = Vec3::Zero();
};

struct BaseRate {
  Vec3 dpose, dvel, dodom;
};

class Ring {
 public:
  Ring(std::size_t delay, const Vec3& fill) : buf_(delay + 1, fill) {}
  void push(const Vec3& v) {
    head_ = (head_ + 1) % buf_.size();
    buf_[head_] = v;
  }
  const Vec3& delayed() const { return buf_[(head_ + 1) % buf_.size()]; }

 private:
  std::vector<Vec3> buf_;
  std::size_t head_ = 0;
};

long ticks_of(double value, double dt, const char* what) {
  const long n = std::lround(value / dt);
  if (value > 0.0 && std::abs(n * dt - value) > 1e-9 * std::max(1.0, value))
    throw Error(ErrorCode::kDtTooCoarse,
                std::string(what) + " is not a multiple of the base step");
  return n;
}

bool finite(const Vec3& v) { return v.allFinite(); }

}  // namespace

void BaseGeometry::validate() const {
  require(std::isfinite(mount_radius) && mount_radius > 0.0,
          "base: mount radius must be > 0");
  require(std::isfinite(wheel_radius) && wheel_radius > 0.0,
          "base: wheel radius must be > 0");
  require(std::isfinite(mass) && mass > 0.0, "base: mass must be > 0");
  require(std::isfinite(yaw_inertia) && yaw_inertia > 0.0,
          "base: yaw inertia must be > 0");
  require(std::isfinite(wheel_damping) && wheel_damping >= 0.0,
          "base: wheel damping must be >= 0");
  for (double a : wheel_angles)
    require(std::isfinite(a), "base: wheel angles must be finite");
}

Mat3 wheel_jacobian(const BaseGeometry& geom) {
  geom.validate();
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      const double d = std::remainder(geom.wheel_angles[i] - geom.wheel_angles[j],
                                      2.0 * kPi);
      if (std::abs(d) < 1e-9)
        throw Error(ErrorCode::kSingular,
                    "wheel jacobian singular: duplicate wheel angles");
    }
  }
  Mat3 j;
  for (int i = 0; i < 3; ++i) {
    const double phi = geom.wheel_angles[i];
    j.row(i) << -std::sin(phi), std::cos(phi), geom.mount_radius;
  }
  j /= geom.wheel_radius;
  if (std::abs(j.determinant()) < 1e-12)
    throw Error(ErrorCode::kSingular, "wheel jacobian singular");
  return j;
}

const char* to_string(Architecture a) {
  return a == Architecture::kCentralized ? "COSC" : "DOSC";
}

void ArchitectureConfig::validate() const {
  require(cartesian_stiffness.allFinite() && (cartesian_stiffness.array() >= 0).all(),
          "architecture: stiffness gains must be >= 0");
  require(cartesian_damping.allFinite() && (cartesian_damping.array() >= 0).all(),
          "architecture: damping gains must be >= 0");
  require(std::isfinite(joint_damping) && joint_damping >= 0.0,
          "architecture: joint damping must be >= 0");
  if (kind == Architecture::kCentralized)
    require(joint_damping == 0.0, "architecture: COSC has no joint damping");
  else
    require(cartesian_damping.isZero(0.0),
            "architecture: DOSC has no Cartesian damping");
  require(std::isfinite(highlevel_delay) && highlevel_delay >= 0.0,
          "architecture: high-level delay must be >= 0");
  require(std::isfinite(highlevel_period) && highlevel_period > 0.0,
          "architecture: high-level period must be > 0");
  require(std::isfinite(embedded_period) && embedded_period > 0.0,
          "architecture: embedded period must be > 0");
  require(std::isfinite(velocity_filter_tau) && velocity_filter_tau >= 0.0,
          "architecture: velocity filter tau must be >= 0");
}

ArchitectureConfig ArchitectureConfig::normalized(Architecture kind,
                                                  const BaseGeometry& geom,
                                                  double stiffness_per_mass,
                                                  double damping,
                                                  double joint_damping) {
  ArchitectureConfig a;
  a.kind = kind;
  const Vec3 inertia(geom.mass, geom.mass, geom.yaw_inertia);
  a.cartesian_stiffness = stiffness_per_mass * inertia;
  if (kind == Architecture::kCentralized)
    a.cartesian_damping = damping * inertia;
  else
    a.joint_damping = joint_damping;
  return a;
}

void CircleTrajectory::validate() const {
  require(std::isfinite(radius) && radius >= 0.0,
          "circle: radius must be >= 0");
  require(std::isfinite(period) && period > 0.0, "circle: period must be > 0");
}

Vec3 CircleTrajectory::pose(double t) const {
  const double a = 2.0 * kPi * t / period;
  return {radius * std::sin(a), radius * (1.0 - std::cos(a)), heading};
}

Vec3 CircleTrajectory::velocity(double t) const {
  const double w = 2.0 * kPi / period;
  const double a = w * t;
  return {radius * w * std::cos(a), radius * w * std::sin(a), 0.0};
}

CircleTrajectory circle_trajectory(double radius, double period) {
  CircleTrajectory c{radius, period, 0.0};
  c.validate();
  return c;
}

std::string BaseTrace::csv(std::size_t stride) const {
  if (stride == 0) stride = 1;
  std::ostringstream out;
  out << "t,x,y,theta,x_d,y_d,theta_d,w1,w2,w3,tau1,tau2,tau3\n";
  for (std::size_t i = 0; i < t.size(); i += stride) {
    out << num(t[i]);
    for (const auto* v : {&pose[i], &pose_ref[i], &wheel_speed[i], &wheel_torque[i]})
      for (int k = 0; k < 3; ++k) out << ',' << num((*v)[k]);
    out << '\n';
  }
  return out.str();
}

BaseTrace simulate_base(const BaseGeometry& geom,
                        const ArchitectureConfig& arch,
                        const CircleTrajectory& trajectory, double duration,
                        const BaseSimOptions& options) {
  arch.validate();
  trajectory.validate();
  require(std::isfinite(duration) && duration > 0.0, "base: duration must be > 0");
  require(std::isfinite(options.dt) && options.dt > 0.0, "base: dt must be > 0");
  require(options.divergence_bound > 0.0, "base: divergence bound must be > 0");
  const Mat3 jac = wheel_jacobian(geom);
  const Mat3 jac_inv = jac.inverse();
  const Mat3 jac_inv_t = jac_inv.transpose();
  const double dt = options.dt;
  const long delay = ticks_of(arch.highlevel_delay, dt, "high-level delay");
  const long hl_ticks = ticks_of(arch.highlevel_period, dt, "high-level period");
  const long emb_ticks = ticks_of(arch.embedded_period, dt, "embedded period");
  require(hl_ticks > 0 && emb_ticks > 0,
          "base: servo periods must be at least one base step",
          ErrorCode::kDtTooCoarse);
  const long steps = std::lround(duration / dt);
  require(steps > 0, "base: duration shorter than one step");
  const bool dosc = arch.kind == Architecture::kDistributed;
  const Vec3 inertia(geom.mass, geom.mass, geom.yaw_inertia);
  const Vec3 wheel_damping = Vec3::Constant(geom.wheel_damping);
  const double a_filt =
      arch.velocity_filter_tau > 0.0 ? std::exp(-dt / arch.velocity_filter_tau) : 0.0;

  auto body_twist = [](const Vec3& pose, const Vec3& vel) {
    Vec3 v = yaw_rotation(pose[2]).transpose() * vel;
    v[2] = vel[2];
    return v;
  };
  auto to_world = [](double theta, const Vec3& body) {
    Vec3 v = yaw_rotation(theta) * body;
    v[2] = body[2];
    return v;
  };

  BaseState s;
  s.pose = trajectory.pose(0.0);
  s.vel = trajectory.velocity(0.0) + options.initial_velocity_offset;
  s.odom = s.pose;

  auto rate = [&](const BaseState& x, const Vec3& torque) {
    const Vec3 twist = body_twist(x.pose, x.vel);
    const Vec3 wheels = jac * twist;
    const Vec3 wrench_body =
        jac.transpose() * (torque - wheel_damping.cwiseProduct(wheels));
    BaseRate r;
    r.dpose = x.vel;
    r.dvel = to_world(x.pose[2], wrench_body).cwiseQuotient(inertia);
    r.dodom = to_world(x.odom[2], jac_inv * wheels);
    return r;
  };
  auto advance = [](const BaseState& x, const BaseRate& r, double h) {
    BaseState y;
    y.pose = x.pose + h * r.dpose;
    y.vel = x.vel + h * r.dvel;
    y.odom = x.odom + h * r.dodom;
    return y;
  };

  // Measurements come from wheel encoders only: odometry pose and the
  // Cartesian velocity reconstructed from wheel speeds.
  auto wheel_speeds = [&](const BaseState& x) {
    return Vec3(jac * body_twist(x.pose, x.vel));
  };
  Vec3 w0 = wheel_speeds(s);
  Vec3 cart_vel_filt = to_world(s.odom[2], jac_inv * w0);
  Vec3 wheel_filt = w0;
  Ring pose_line(delay, s.odom);
  Ring vel_line(delay, cart_vel_filt);
  Ring wheel_line(emb_ticks, wheel_filt);

  Vec3 hl_torque = Vec3::Zero();
  Vec3 wheel_ref = Vec3::Zero();
  Vec3 torque = Vec3::Zero();

  BaseTrace tr;
  const std::size_t stride = std::max<std::size_t>(1, options.record_stride);
  const std::size_t expect = static_cast<std::size_t>(steps) / stride + 2;
  for (auto* v : {&tr.pose, &tr.pose_ref, &tr.velocity, &tr.velocity_ref,
                  &tr.wheel_speed, &tr.wheel_torque, &tr.odometry})
    v->reserve(expect);
  tr.t.reserve(expect);

  for (long n = 0; n <= steps; ++n) {
    const double t = n * dt;
    const Vec3 wheels = wheel_speeds(s);
    const Vec3 cart_vel = to_world(s.odom[2], jac_inv * wheels);
    if (n > 0) {
      cart_vel_filt = a_filt * cart_vel_filt + (1.0 - a_filt) * cart_vel;
      wheel_filt = a_filt * wheel_filt + (1.0 - a_filt) * wheels;
    }
    pose_line.push(s.odom);
    vel_line.push(cart_vel_filt);
    wheel_line.push(wheel_filt);

    const Vec3 pose_d = trajectory.pose(t);
    const Vec3 vel_d = trajectory.velocity(t);
    if (n % hl_ticks == 0) {
      const Vec3& pose_m = pose_line.delayed();
      Vec3 force = arch.cartesian_stiffness.cwiseProduct(pose_d - pose_m);
      if (!dosc)
        force += arch.cartesian_damping.cwiseProduct(vel_d - vel_line.delayed());
      hl_torque = jac_inv_t * body_twist(pose_m, force);
      wheel_ref = jac * body_twist(pose_m, vel_d);
    }
    if (n % emb_ticks == 0) {
      torque = hl_torque;
      if (dosc) torque += arch.joint_damping * (wheel_ref - wheel_line.delayed());
    }

    if (n % static_cast<long>(stride) == 0 || n == steps) {
      tr.t.push_back(t);
      tr.pose.push_back(s.pose);
      tr.pose_ref.push_back(pose_d);
      tr.velocity.push_back(s.vel);
      tr.velocity_ref.push_back(vel_d);
      tr.wheel_speed.push_back(wheels);
      tr.wheel_torque.push_back(torque);
      tr.odometry.push_back(s.odom);
    }

    const Vec3 err = s.pose - pose_d;
    if (!finite(s.pose) || !finite(s.vel) ||
        std::hypot(err[0], err[1]) > options.divergence_bound ||
        std::abs(err[2]) > options.divergence_bound) {
      tr.diverged = true;
      tr.diverged_at = t;
      break;
    }
    if (n == steps) break;

    const BaseRate k1 = rate(s, torque);
    const BaseRate k2 = rate(advance(s, k1, 0.5 * dt), torque);
    const BaseRate k3 = rate(advance(s, k2, 0.5 * dt), torque);
    const BaseRate k4 = rate(advance(s, k3, dt), torque);
    s.pose += dt / 6.0 * (k1.dpose + 2.0 * k2.dpose + 2.0 * k3.dpose + k4.dpose);
    s.vel += dt / 6.0 * (k1.dvel + 2.0 * k2.dvel + 2.0 * k3.dvel + k4.dvel);
    s.odom += dt / 6.0 * (k1.dodom + 2.0 * k2.dodom + 2.0 * k3.dodom + k4.dodom);
  }
  return tr;
}

TrackingError tracking_error(const BaseTrace& trace, double discard) {
  if (trace.diverged)
    throw Error(ErrorCode::kDiverged, "tracking error of a diverged trace");
  double sp = 0.0, sv = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace.t[i] < discard) continue;
    const Vec3 ep = trace.pose[i] - trace.pose_ref[i];
    const Vec3 ev = trace.velocity[i] - trace.velocity_ref[i];
    sp += ep[0] * ep[0] + ep[1] * ep[1];
    sv += ev[0] * ev[0] + ev[1] * ev[1];
    ++n;
  }
  require(n > 0, "tracking error: discard window covers the whole trace");
  return {std::sqrt(sp / n), std::sqrt(sv / n)};
}

namespace {

bool sustained(const std::vector<double>& sig, const VibrationDetector& det) {
  const std::size_t n = sig.size();
  const std::size_t start =
      n - std::max<std::size_t>(4, static_cast<std::size_t>(n * det.window_fraction));
  const std::size_t mid = start + (n - start) / 2;
  int crossings = 0;
  double env1 = 0.0, env2 = 0.0;
  for (std::size_t i = start; i < n; ++i) {
    if (i > start && (sig[i] > 0.0) != (sig[i - 1] > 0.0)) ++crossings;
    (i < mid ? env1 : env2) = std::max(i < mid ? env1 : env2, std::abs(sig[i]));
  }
  return crossings >= det.min_zero_crossings && env2 > det.floor &&
         env2 >= det.decay_ratio * env1;
}

}  // namespace

bool vibrates(const BaseGeometry& geom, const ArchitectureConfig& arch,
              const CircleTrajectory& trajectory,
              const StiffnessSearch& search) {
  BaseSimOptions quiet = search.sim;
  quiet.initial_velocity_offset = Vec3::Zero();
  BaseSimOptions kicked = search.sim;
  kicked.initial_velocity_offset = search.perturbation;
  const BaseTrace a = simulate_base(geom, arch, trajectory, search.duration, quiet);
  if (a.diverged) return true;
  const BaseTrace b = simulate_base(geom, arch, trajectory, search.duration, kicked);
  if (b.diverged) return true;
  for (int k = 0; k < 3; ++k) {
    std::vector<double> diff(a.size());
    const double scale = k == 2 ? geom.mount_radius : 1.0;
    for (std::size_t i = 0; i < a.size(); ++i)
      diff[i] = scale * (b.velocity[i][k] - a.velocity[i][k]);
    if (sustained(diff, search.detector)) return true;
  }
  return false;
}

StiffnessResult max_stable_stiffness(const BaseGeometry& geom,
                                     Architecture kind,
                                     const CircleTrajectory& trajectory,
                                     const ArchitectureConfig& base_config,
                                     const StiffnessSearch& search) {
  require(search.relative_tolerance > 0.0 && search.initial_damping > 0.0 &&
              search.initial_stiffness > 0.0 && search.duration > 0.0,
          "stiffness search: invalid settings");
  StiffnessResult res;
  auto config = [&](double k, double d) {
    ArchitectureConfig a = ArchitectureConfig::normalized(
        kind, geom, k, kind == Architecture::kCentralized ? d : 0.0,
        kind == Architecture::kDistributed ? d : 0.0);
    a.highlevel_delay = base_config.highlevel_delay;
    a.highlevel_period = base_config.highlevel_period;
    a.embedded_period = base_config.embedded_period;
    a.velocity_filter_tau = base_config.velocity_filter_tau;
    return a;
  };
  auto probe = [&](double k, double d) {
    ++res.simulations;
    return vibrates(geom, config(k, d), trajectory, search);
  };
  // Largest non-vibrating x for a gain that is quiet at zero.
  auto raise = [&](double first, auto vib, double& lo_out, double& hi_out) {
    double lo = 0.0, hi = first;
    int doublings = 0;
    while (!vib(hi)) {
      lo = hi;
      hi *= 2.0;
      if (++doublings > search.max_doublings) {
        lo_out = lo;
        hi_out = std::numeric_limits<double>::infinity();
        return false;
      }
    }
    while (hi - lo > search.relative_tolerance * hi && hi > first * 1e-9) {
      const double mid = 0.5 * (lo + hi);
      (vib(mid) ? hi : lo) = mid;
    }
    lo_out = lo;
    hi_out = hi;
    return true;
  };

  const bool damping_ok = raise(
      search.initial_damping, [&](double d) { return probe(0.0, d); },
      res.damping, res.damping_hi);
  if (!damping_ok) {
    res.inconclusive = true;
    res.note = "damping never vibrated within the search range";
    return res;
  }
  if (res.damping == 0.0) {
    res.inconclusive = true;
    res.note = "vibration at the smallest damping probe";
    return res;
  }
  const bool stiffness_ok = raise(
      search.initial_stiffness,
      [&](double k) { return probe(k, res.damping); }, res.stiffness,
      res.stiffness_hi);
  if (!stiffness_ok) {
    res.inconclusive = true;
    res.note = "stiffness never vibrated within the search range";
  } else if (res.stiffness == 0.0) {
    res.inconclusive = true;
    res.note = "vibration at the smallest stiffness probe";
  }
  return res;
}

}  // namespace distpd
