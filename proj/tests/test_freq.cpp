#include <doctest.h>

#include <cmath>
#include <random>

#include "errors.hpp"
#include "freq.hpp"
#include "oracles.hpp"

using namespace distpd;

namespace {

LoopSystem make(double m, double b, double K, double B, double Ts = 0.0,
                double Td = 0.0, double tau = 0.0) {
  LoopSystem s;
  s.actuator = {m, b, 1.0};
  s.controller = {K, B, Ts, Td, tau};
  return s;
}

double rel(Complex got, Complex want) {
  return std::abs(got - want) / std::abs(want);
}

oracle::cplx direct(const LoopSystem& s, double w) {
  const auto& c = s.controller;
  return oracle::open_loop(s.actuator.m, s.actuator.b, c.K, c.B, c.Ts, c.Td,
                           c.tau_v, w);
}

}  // namespace

TEST_CASE("open loop at the unit system") {
  const FreqPoint p = open_loop_response(make(1, 1, 1, 1), 1.0);
  CHECK(std::abs(p.value - Complex(0, -1)) < 1e-15);
  CHECK(p.a1 == doctest::Approx(1.0));
  CHECK(p.a2 == doctest::Approx(1.0));
  CHECK(std::arg(p.value) * 180.0 / oracle::kPi == doctest::Approx(-90.0));
}

TEST_CASE("undelayed numerator components") {
  const LoopSystem s = make(3, 2, 40, 7);
  for (double w : {0.1, 1.0, 13.0}) {
    double a1, a2;
    numerator_components(s, w, a1, a2);
    CHECK(a1 == doctest::Approx(7 * w).epsilon(1e-14));
    CHECK(a2 == doctest::Approx(40).epsilon(1e-14));
  }
}

TEST_CASE("open loop matches direct exponential evaluation") {
  const LoopSystem fig = critically_damped_system({256, 1250, 1}, 6, 0.001, 0.001, 0.0032);
  const double w6 = 2 * oracle::kPi * 6;
  CHECK(rel(open_loop_response(fig, w6).value, direct(fig, w6)) < 1e-12);

  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> lw(-2.0, 4.0);
  for (int i = 0; i < 1000; ++i) {
    const LoopSystem s = oracle::random_system(rng).sys;
    const double w = std::pow(10.0, lw(rng));
    CHECK(rel(open_loop_response(s, w).value, direct(s, w)) < 1e-12);
  }
}

TEST_CASE("open loop rejects non-positive frequency") {
  CHECK_THROWS_AS(open_loop_response(make(1, 1, 1, 1), 0.0), Error);
  CHECK_THROWS_AS(closed_loop_response(make(1, 1, 1, 1), -1.0), Error);
}

TEST_CASE("crossover examples") {
  const MarginReport q = phase_margin(make(1, 0, 1, 2));
  CHECK(oracle::rel_err(q.omega_g, oracle::quartic_crossover()) < 1e-12);
  CHECK(q.pm_deg == doctest::Approx(std::atan(2 * q.omega_g) * 180 / oracle::kPi));
  CHECK(q.pm_deg == doctest::Approx(76.35).epsilon(1e-4));
  CHECK(q.crossings == 1);

  const MarginReport u = phase_margin(make(1, 1, 1, 1));
  CHECK(u.omega_g == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(u.pm_deg == doctest::Approx(90.0).epsilon(1e-10));
  CHECK(u.stable_hint);

  try {
    gain_crossover(make(256, 1250, 1e-9, 1e-9));
    FAIL("expected no crossover");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNoCrossover);
  }
}

TEST_CASE("phase margin equals direct phase at the crossover") {
  std::mt19937_64 rng(22);
  for (int i = 0; i < 200; ++i) {
    const LoopSystem s = oracle::random_system(rng).sys;
    const MarginReport r = phase_margin(s);
    const oracle::cplx v = direct(s, r.omega_g);
    CHECK(std::abs(std::abs(v) - 1.0) < 1e-9);
    CHECK(r.crossings >= 1);
    // 180 + arg, wrapped into (-180, 180].
    double pm = 180.0 + std::arg(v) * 180.0 / oracle::kPi;
    double ours = std::remainder(r.pm_deg, 360.0);
    pm = std::remainder(pm, 360.0);
    CHECK(std::abs(std::remainder(ours - pm, 360.0)) < 1e-8);
  }
}

TEST_CASE("closed loop forms agree") {
  const Complex hand = closed_loop_response(make(1, 0, 1, 2), 1.0);
  CHECK(std::abs(hand - Complex(1.0, -0.5)) < 1e-15);

  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> lw(-2.0, 4.0);
  for (int i = 0; i < 100; ++i) {
    const LoopSystem s = oracle::random_system(rng).sys;
    const double w = std::pow(10.0, lw(rng));
    const Complex a = closed_loop_response(s, w);
    CHECK(rel(closed_loop_response_via_open_loop(s, w), a) < 1e-12);
    const auto& c = s.controller;
    CHECK(rel(a, oracle::closed_loop(s.actuator.m, s.actuator.b, c.K, c.B, c.Ts,
                                     c.Td, c.tau_v, w)) < 1e-12);
    CHECK(std::abs(closed_loop_response(s, 1e-6) - 1.0) < 1e-3);
  }
}

TEST_CASE("delay-free critically damped loops have positive margin") {
  std::mt19937_64 rng(24);
  for (int i = 0; i < 200; ++i) {
    LoopSystem s = oracle::random_system(rng).sys;
    s.controller.Ts = s.controller.Td = s.controller.tau_v = 0.0;
    CHECK(phase_margin(s).pm_deg > 0.0);
  }
}

TEST_CASE("phase margin continuous through a2 sign change") {
  // Sweep Td so the numerator's real part changes sign at the crossover.
  const ActuatorParams act{256, 1250, 1};
  double prev = phase_margin(critically_damped_system(act, 10, 0.0, 0.0, 0.0032)).pm_deg;
  for (int k = 1; k <= 200; ++k) {
    const double td = 1e-4 * k;
    const double pm = phase_margin(critically_damped_system(act, 10, 0.0, td, 0.0032)).pm_deg;
    CHECK(std::abs(pm - prev) < 5.0);
    prev = pm;
  }
}

TEST_CASE("pm sweep over the actuator grid") {
  const ActuatorParams act{256, 1250, 1};
  std::vector<double> fn;
  for (int f = 1; f <= 30; ++f) fn.push_back(f);
  const std::vector<double> d = {0.001, 0.002, 0.003, 0.004, 0.005};
  const auto rows = pm_sweep(act, 0.0032, fn, d, d, 2);
  REQUIRE(rows.size() == fn.size() * d.size() * d.size());
  CHECK(rows.front().Ts == 0.001);
  CHECK(rows.front().Td == 0.001);
  CHECK(rows[1].f_n_hz == 2.0);

  auto at = [&](std::size_t ts, std::size_t td, std::size_t f) -> const PmRow& {
    return rows[(ts * d.size() + td) * fn.size() + f];
  };
  for (const auto& r : rows) CHECK(r.status == "ok");

  for (std::size_t ts = 0; ts < d.size(); ++ts)
    for (std::size_t td = 0; td < d.size(); ++td)
      for (std::size_t f = 1; f < fn.size(); ++f)
        CHECK(at(ts, td, f).pm_deg <= at(ts, td, f - 1).pm_deg + 1e-9);

  for (std::size_t ts = 0; ts < d.size(); ++ts)
    for (std::size_t td = 1; td < d.size(); ++td)
      for (std::size_t f = 0; f < fn.size(); ++f)
        CHECK(at(ts, td, f).pm_deg <= at(ts, td - 1, f).pm_deg + 1e-9);

  double ts_effect = 0, td_effect = 0;
  for (std::size_t f = 0; f < fn.size(); ++f) {
    ts_effect = std::max(ts_effect, std::abs(at(4, 0, f).pm_deg - at(0, 0, f).pm_deg));
    td_effect = std::max(td_effect, std::abs(at(0, 4, f).pm_deg - at(0, 0, f).pm_deg));
  }
  CHECK(ts_effect < td_effect);

  for (std::size_t f = 0; f < fn.size(); ++f)
    CHECK(at(2, 4, f).pm_deg < at(2, 0, f).pm_deg);
}

TEST_CASE("pm sweep single cell and flagged cells") {
  const ActuatorParams act{256, 1250, 1};
  const auto one = pm_sweep(act, 0.0032, {7.0}, {0.002}, {0.003});
  REQUIRE(one.size() == 1);
  const MarginReport r = phase_margin(critically_damped_system(act, 7.0, 0.002, 0.003, 0.0032));
  CHECK(one[0].pm_deg == r.pm_deg);
  CHECK(one[0].omega_g == r.omega_g);

  const auto bad = pm_sweep(act, 0.0032, {0.1, 5.0}, {0.001}, {0.001});
  REQUIRE(bad.size() == 2);
  CHECK(bad[0].status == "degenerate_gains");
  CHECK(bad[1].status == "ok");
  CHECK(pm_table_csv(bad).rfind("f_n_hz,", 0) == 0);
}

TEST_CASE("pm sweep is independent of thread count") {
  const ActuatorParams act{256, 1250, 1};
  const std::vector<double> fn = {1, 3, 5, 8, 13, 21};
  const std::vector<double> d = {0.001, 0.004};
  CHECK(pm_table_csv(pm_sweep(act, 0.0032, fn, d, d, 1)) ==
        pm_table_csv(pm_sweep(act, 0.0032, fn, d, d, 4)));
}
