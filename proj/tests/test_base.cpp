#include <doctest.h>

#include <cmath>

#include "base.hpp"
#include "errors.hpp"
#include "oracles.hpp"

using namespace distpd;

namespace {

// Wheel Jacobian assembled entry by entry.
void hand_jacobian(const BaseGeometry& g, double J[3][3]) {
  for (int i = 0; i < 3; ++i) {
    J[i][0] = -std::sin(g.wheel_angles[i]) / g.wheel_radius;
    J[i][1] = std::cos(g.wheel_angles[i]) / g.wheel_radius;
    J[i][2] = g.mount_radius / g.wheel_radius;
  }
}

// Cramer's rule for A x = y.
void solve3(const double A[3][3], const double y[3], double x[3]) {
  auto det = [](const double M[3][3]) {
    return M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1]) -
           M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0]) +
           M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0]);
  };
  const double d = det(A);
  for (int c = 0; c < 3; ++c) {
    double M[3][3];
    for (int r = 0; r < 3; ++r)
      for (int k = 0; k < 3; ++k) M[r][k] = k == c ? y[r] : A[r][k];
    x[c] = det(M) / d;
  }
}

double kinetic(const BaseGeometry& g, const Eigen::Vector3d& v) {
  return 0.5 * g.mass * (v[0] * v[0] + v[1] * v[1]) + 0.5 * g.yaw_inertia * v[2] * v[2];
}

}  // namespace

TEST_CASE("wheel jacobian entries") {
  const BaseGeometry g;
  double J[3][3];
  hand_jacobian(g, J);
  const Eigen::Matrix3d j = wheel_jacobian(g);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) CHECK(j(r, c) == doctest::Approx(J[r][c]).epsilon(1e-15));
}

TEST_CASE("wheel torques reproduce the commanded body force") {
  const BaseGeometry g;
  double J[3][3], JT[3][3];
  hand_jacobian(g, J);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) JT[r][c] = J[c][r];
  const Eigen::Matrix3d jinv_t = wheel_jacobian(g).inverse().transpose();
  const double forces[][3] = {{10, 0, 0}, {0, -4, 0}, {0, 0, 2}, {3, -7, 0.5}};
  for (const auto& f : forces) {
    const Eigen::Vector3d tau = jinv_t * Eigen::Vector3d(f[0], f[1], f[2]);
    double want[3];
    solve3(JT, f, want);
    for (int i = 0; i < 3; ++i) CHECK(tau[i] == doctest::Approx(want[i]).epsilon(1e-12));
    for (int r = 0; r < 3; ++r) {
      double back = 0.0;
      for (int c = 0; c < 3; ++c) back += JT[r][c] * tau[c];
      CHECK(std::abs(back - f[r]) < 1e-9);
    }
  }
}

TEST_CASE("duplicate wheel angles are singular") {
  BaseGeometry g;
  g.wheel_angles = {0.0, 0.0, 2.0};
  try {
    wheel_jacobian(g);
    FAIL("expected singular");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSingular);
  }
  g = BaseGeometry{};
  g.mass = 0.0;
  CHECK_THROWS_AS(g.validate(), Error);
}

TEST_CASE("architecture invariants") {
  ArchitectureConfig c;
  c.kind = Architecture::kCentralized;
  c.joint_damping = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c.kind = Architecture::kDistributed;
  c.joint_damping = 1.0;
  c.cartesian_damping = Eigen::Vector3d(1, 0, 0);
  CHECK_THROWS_AS(c.validate(), Error);
  c.cartesian_damping.setZero();
  CHECK_NOTHROW(c.validate());
  CHECK(std::string(to_string(Architecture::kCentralized)) == "COSC");
  CHECK(std::string(to_string(Architecture::kDistributed)) == "DOSC");

  const BaseGeometry g;
  const ArchitectureConfig n =
      ArchitectureConfig::normalized(Architecture::kCentralized, g, 30.0, 5.0, 0.0);
  CHECK(n.cartesian_stiffness[0] == doctest::Approx(30.0 * g.mass));
  CHECK(n.cartesian_stiffness[2] == doctest::Approx(30.0 * g.yaw_inertia));
  CHECK(n.cartesian_damping[1] == doctest::Approx(5.0 * g.mass));
}

TEST_CASE("circle trajectory") {
  const CircleTrajectory c = circle_trajectory(0.3, 4.0);
  const Eigen::Vector3d start = c.pose(0.0), end = c.pose(4.0);
  CHECK((end - start).norm() < 1e-12);
  for (int i = 0; i <= 40; ++i) {
    const Eigen::Vector3d v = c.velocity(0.1 * i);
    CHECK(std::hypot(v[0], v[1]) == doctest::Approx(2 * oracle::kPi * 0.3 / 4.0).epsilon(1e-12));
    CHECK(v[2] == 0.0);
  }
  // Velocity is the derivative of the pose.
  const double h = 1e-6;
  const Eigen::Vector3d fd = (c.pose(1.3 + h) - c.pose(1.3 - h)) / (2 * h);
  CHECK((fd - c.velocity(1.3)).norm() < 1e-8);
  CHECK_THROWS_AS(circle_trajectory(0.3, 0.0), Error);
}

TEST_CASE("rigid body follows the wheel torques") {
  BaseGeometry g;
  g.wheel_damping = 0.0;
  ArchitectureConfig a = ArchitectureConfig::normalized(Architecture::kCentralized, g, 20.0, 10.0, 0.0);
  BaseSimOptions o;
  o.dt = 1e-4;
  const BaseTrace tr = simulate_base(g, a, circle_trajectory(0.3, 4.0), 0.5, o);
  REQUIRE_FALSE(tr.diverged);
  const Eigen::Matrix3d jt = wheel_jacobian(g).transpose();
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < tr.size(); i += 37) {
    const Eigen::Vector3d body = jt * tr.wheel_torque[i];
    const double th = tr.pose[i][2];
    const Eigen::Vector3d world(std::cos(th) * body[0] - std::sin(th) * body[1],
                                std::sin(th) * body[0] + std::cos(th) * body[1], body[2]);
    const Eigen::Vector3d acc = (tr.velocity[i + 1] - tr.velocity[i]) / o.dt;
    const Eigen::Vector3d want(world[0] / g.mass, world[1] / g.mass, world[2] / g.yaw_inertia);
    worst = std::max(worst, (acc - want).norm() / std::max(want.norm(), 1e-3));
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("odometry tracks the true pose without slip") {
  const BaseGeometry g;
  for (Architecture k : {Architecture::kCentralized, Architecture::kDistributed}) {
    const ArchitectureConfig a = ArchitectureConfig::normalized(
        k, g, 20.0, k == Architecture::kCentralized ? 10.0 : 0.0,
        k == Architecture::kDistributed ? 2.0 : 0.0);
    BaseSimOptions o;
    o.initial_velocity_offset = Eigen::Vector3d(0.05, -0.02, 0.3);
    const BaseTrace tr = simulate_base(g, a, circle_trajectory(0.3, 4.0), 2.0, o);
    REQUIRE_FALSE(tr.diverged);
    double worst = 0.0;
    for (std::size_t i = 0; i < tr.size(); ++i)
      worst = std::max(worst, (tr.odometry[i] - tr.pose[i]).norm());
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("embedded joint damping dissipates energy") {
  const BaseGeometry g;
  const ArchitectureConfig a =
      ArchitectureConfig::normalized(Architecture::kDistributed, g, 0.0, 0.0, 0.3);
  BaseSimOptions o;
  o.initial_velocity_offset = Eigen::Vector3d(0.2, -0.1, 0.5);
  const BaseTrace tr = simulate_base(g, a, circle_trajectory(0.0, 1.0), 1.0, o);
  REQUIRE_FALSE(tr.diverged);
  double prev = kinetic(g, tr.velocity.front());
  CHECK(prev > 0.0);
  for (const auto& v : tr.velocity) {
    const double e = kinetic(g, v);
    CHECK(e <= prev * (1.0 + 1e-12));
    prev = e;
  }
  CHECK(prev < 1e-3 * kinetic(g, tr.velocity.front()));
}

TEST_CASE("base trace and tracking error") {
  const BaseGeometry g;
  const ArchitectureConfig a = ArchitectureConfig::normalized(Architecture::kCentralized, g, 10.0, 20.0, 0.0);
  BaseSimOptions o;
  o.record_stride = 10;
  const BaseTrace tr = simulate_base(g, a, circle_trajectory(0.3, 4.0), 4.5, o);
  CHECK(tr.t.back() == doctest::Approx(4.5));
  CHECK(tr.size() == 4501);
  const TrackingError e = tracking_error(tr, 4.0);
  CHECK(e.position_rms > 0.0);
  CHECK(e.position_rms < 0.05);
  CHECK(tr.csv().rfind("t,x,y,theta,x_d,y_d,theta_d,w1,w2,w3,tau1,tau2,tau3\n", 0) == 0);
  CHECK_THROWS_AS(tracking_error(tr, 10.0), Error);

  ArchitectureConfig coarse = a;
  coarse.embedded_period = 5e-5;
  try {
    simulate_base(g, coarse, circle_trajectory(0.3, 4.0), 1.0, o);
    FAIL("expected coarse grid error");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::kDtTooCoarse);
  }
}

TEST_CASE("vibration detector separates low and high stiffness") {
  const BaseGeometry g;
  const CircleTrajectory c = circle_trajectory(0.3, 4.0);
  StiffnessSearch s;
  s.duration = 4.0;
  const ArchitectureConfig soft = ArchitectureConfig::normalized(Architecture::kCentralized, g, 5.0, 30.0, 0.0);
  const ArchitectureConfig stiff = ArchitectureConfig::normalized(Architecture::kCentralized, g, 3000.0, 30.0, 0.0);
  CHECK_FALSE(vibrates(g, soft, c, s));
  CHECK(vibrates(g, stiff, c, s));
}
