#include "doctest.h"
#include "oracles.hpp"

#include "bsv/drive.hpp"
#include "bsv/errors.hpp"
#include "bsv/gauss_kronrod.hpp"
#include "bsv/tunneling_solver.hpp"

#include <cmath>
#include <numbers>

using namespace bsv;
using std::numbers::pi;

namespace
{

const BarrierSpec barrier{};
const ComplexScalar I(0.0, 1.0);

SqueezingParams with_r(double r)
{
  SqueezingParams p;
  p.r = r;
  return p;
}

double eps_offset(double re_t0, double omega)
{
  const double f = omega * re_t0 / (2 * pi) - 0.25;
  return f - 0.5 * std::floor(f / 0.5);
}

} // namespace

TEST_CASE("barrier and contour validation")
{
  BarrierSpec b;
  b.delta_u = 0;
  CHECK_THROWS_AS(b.validate(), ValidationError);
  ContourSpec c;
  c.max_step = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  CHECK(barrier.launch_speed() == doctest::Approx(std::sqrt(2 * barrier.delta_u)));
  CHECK(barrier.gap_length == doctest::Approx(56.69).epsilon(1e-3));
}

TEST_CASE("free under-barrier motion without a field")
{
  const ConstantDrive none(0.0);
  const double v0 = barrier.launch_speed();
  for (double T : {0.5, 3.0, 40.0}) {
    const ComplexScalar t0(7.0, T);
    const ContourState st = complex_trajectory(none, barrier, t0, {});
    CHECK(st.v == I * v0);
    CHECK(std::abs(st.x - I * v0 * (7.0 - t0)) <= 1e-13 * v0 * T);
    const auto res = exit_residual(none, barrier, t0, {});
    CHECK(res[1] == doctest::Approx(v0));
  }
}

TEST_CASE("constant force: closed-form exit at the adiabatic time")
{
  for (double e0 : {0.01, 0.05, 0.3}) {
    const ConstantDrive drive(-e0);
    const double T = std::sqrt(2 * barrier.mass * barrier.delta_u) / (barrier.charge * e0);
    const ComplexScalar t0(4.0, T);
    for (auto shape : {ContourSpec::Shape::vertical_then_real, ContourSpec::Shape::straight_line}) {
      ContourSpec c;
      c.shape = shape;
      const auto res = exit_residual(drive, barrier, t0, c);
      CHECK(std::abs(res[0]) < 1e-10);
      CHECK(std::abs(res[1]) < 1e-10);
      const ContourState st = complex_trajectory(drive, barrier, t0, c);
      CHECK(st.x.real() == doctest::Approx(0.5 * barrier.launch_speed() * T).epsilon(1e-12));
    }
    CHECK(keldysh_time(e0, 0.0, barrier) == doctest::Approx(T).epsilon(1e-15));
  }
}

TEST_CASE("contour quadrature self-convergence")
{
  const auto p = with_r(12.0);
  const FieldRealization fr{p, -3.0 * sigma(0, p), 0.0};
  const TunnelSolution sol = solve_tunneling(fr, barrier);
  ContourSpec coarse, fine;
  fine.max_step = coarse.max_step / 10;
  for (double shift : {0.0, 0.3, -2.0}) {
    const ComplexScalar t0 = sol.t0 + shift;
    const ContourState a = complex_trajectory(fr, barrier, t0, coarse);
    const ContourState b = complex_trajectory(fr, barrier, t0, fine);
    CHECK(std::abs(a.x - b.x) <= 1e-9 * std::abs(a.x));
    CHECK(std::abs(a.v - b.v) <= 1e-9 * std::abs(a.v));
  }
}

TEST_CASE("monochromatic drive: saddle at i asinh(gamma)/omega and the Keldysh exponent")
{
  const double w = 0.0285;
  for (double g : {0.2, 0.5, 1.0, 2.0, 5.0}) {
    const CosineDrive drive(-oracle::keldysh_field(g, w, barrier), w);
    const SaddleGuess guess{ComplexScalar(0.3, 1.2 * std::asinh(g) / w), std::nullopt};
    const TunnelSolution sol = solve_saddle(drive, barrier, {}, guess);
    CHECK(sol.converged);
    CHECK(sol.residual_norm < 1e-10);
    CHECK(std::abs(sol.t0.real()) < 1e-8);
    CHECK(sol.t0.imag() == doctest::Approx(std::asinh(g) / w).epsilon(1e-10));
    const double ims = im_action(drive, barrier, sol, {});
    CHECK(2 * ims == doctest::Approx(oracle::keldysh_exponent(g, w, barrier)).epsilon(1e-10));
  }
}

TEST_CASE("static drive exponent")
{
  for (double e0 : {0.01, 0.05, 0.2}) {
    const ConstantDrive drive(-e0);
    const double T = keldysh_time(e0, 0.0, barrier);
    const TunnelSolution sol = solve_saddle(drive, barrier, {}, SaddleGuess{ComplexScalar(1.0, 0.7 * T), std::nullopt});
    CHECK(sol.t0.imag() == doctest::Approx(T).epsilon(1e-10));
    CHECK(2 * im_action(drive, barrier, sol, {}) == doctest::Approx(oracle::static_exponent(e0, barrier)).epsilon(1e-10));
  }
}

TEST_CASE("initial guess")
{
  const auto p = with_r(12.0);
  const FieldRealization fr{p, -2.0 * sigma(0, p), 0.0};
  const SaddleGuess g = initial_guess(fr, barrier);
  REQUIRE(g.window.has_value());
  CHECK(g.t0.imag() > 0.0);
  // first field edge after t = 0 for phi = 0 is at the quarter period
  CHECK(g.window->re_min == doctest::Approx(pi / (2 * p.omega)).epsilon(1e-14));
  const double eps = eps_offset(g.t0.real(), p.omega);
  CHECK(eps > 0.0);
  CHECK(eps < 0.05);
  CHECK(e_field(fr, g.t0.real()) < 0.0);

  CHECK_THROWS_AS(initial_guess(FieldRealization{p, 2.0 * sigma(0, p), 0.0}, barrier), NoValidWindow);
  CHECK_THROWS_AS(initial_guess(FieldRealization{with_r(0.0), -1.0, 0.0}, barrier), NoValidWindow);
  CHECK_THROWS_AS(initial_guess(FieldRealization{p, -1e-14 * sigma(0, p), 0.0}, barrier), NoValidWindow);
}

TEST_CASE("squeezed realizations: converged saddle just after the field edge")
{
  for (double r : {11.0, 12.0, 15.0, 20.0, 25.0}) {
    const auto p = with_r(r);
    for (double s : {-0.05, -0.5, -2.0, -6.0}) {
      const FieldRealization fr{p, s * sigma(0, p), 0.0};
      const TunnelSolution sol = solve_tunneling(fr, barrier);
      CHECK(sol.converged);
      CHECK(sol.t0.imag() > 0.0);
      const double eps = eps_offset(sol.t0.real(), p.omega);
      CHECK(eps > 0.0);
      CHECK(eps < 0.05);
      CHECK(sol.im_action >= 0.0);
      CHECK(sol.probability == doctest::Approx(std::exp(-2 * sol.im_action)));
      const auto res = exit_residual(fr, barrier, sol.t0, {});
      CHECK(std::abs(res[0]) < 1e-8 * std::max(1.0, std::abs(complex_trajectory(fr, barrier, sol.t0, {}).x.real())));
      CHECK(std::abs(res[1]) < 1e-8);
    }
  }
}

TEST_CASE("the saddle is a strict local minimum of the residual in Im t0")
{
  const auto p = with_r(12.0);
  const FieldRealization fr{p, -3.0 * sigma(0, p), 0.0};
  const TunnelSolution sol = solve_tunneling(fr, barrier);
  auto norm = [&](ComplexScalar t0) {
    const auto r = exit_residual(fr, barrier, t0, {});
    return std::hypot(r[0], r[1]);
  };
  CHECK(norm(sol.t0 + 1e-3 * I) > norm(sol.t0));
  CHECK(norm(sol.t0 + 2e-3 * I) > norm(sol.t0 + 1e-3 * I));
}

TEST_CASE("Im S does not depend on the contour shape or the real end point")
{
  const auto p = with_r(12.0);
  ContourSpec straight;
  straight.shape = ContourSpec::Shape::straight_line;
  for (double s : {-0.3, -1.0, -4.0}) {
    const FieldRealization fr{p, s * sigma(0, p), 0.0};
    const TunnelSolution sol = solve_tunneling(fr, barrier);
    const double a = im_action(fr, barrier, sol, {});
    const double b = im_action(fr, barrier, sol, straight);
    CHECK(std::abs(a - b) <= 1e-9 * std::max(1.0, a));
    const ContourState later = complex_trajectory(RealizationDrive(fr, 1e-13), barrier, sol.t0, {}, sol.tau0 + 40.0);
    const double a_later = later.lagrangian_integral.imag() + barrier.delta_u * sol.t0.imag();
    CHECK(std::abs(a_later - a) <= 1e-9 * std::max(1.0, a));
  }
}

TEST_CASE("negative action is rejected")
{
  const ConstantDrive drive(-0.05);
  TunnelSolution bogus;
  bogus.t0 = ComplexScalar(1.0, -keldysh_time(0.05, 0.0, barrier));
  bogus.tau0 = 1.0;
  bogus.converged = true;
  CHECK_THROWS_AS(im_action(drive, barrier, bogus, {}), NegativeImAction);
}

TEST_CASE("tunnel_probability: vacuum, sign selection, monotone in |x_i|")
{
  CHECK(tunnel_probability(-1.0, with_r(0.0), 0.0, barrier) == 0.0);
  const auto p = with_r(13.0);
  const double sig = sigma(0, p);
  CHECK_THROWS_AS(tunnel_probability(0.5 * sig, p, 0.0, barrier), NoValidWindow);
  double prev = 0.0;
  for (double s = -0.1; s >= -8.0; s -= 0.2) {
    const double pr = tunnel_probability(s * sig, p, 0.0, barrier);
    CHECK(pr > prev);
    CHECK(pr <= 1.0);
    prev = pr;
  }
}

TEST_CASE("exit trajectory: real start, monotone motion, work-energy balance")
{
  for (double r : {11.0, 15.0, 25.0}) {
    const auto p = with_r(r);
    const FieldRealization fr{p, -1.5 * sigma(0, p), 0.0};
    const TunnelSolution sol = solve_tunneling(fr, barrier);
    const ContourState st = complex_trajectory(fr, barrier, sol.t0, {});
    CHECK(std::abs(st.x.imag()) < 1e-8);
    CHECK(std::abs(st.v.imag()) < 1e-8);

    const double span = 2 * pi / p.omega;
    const auto samples = exit_trajectory(fr, barrier, sol, sol.tau0 + span, 400);
    REQUIRE(samples.size() >= 2);
    CHECK(samples.front().t == sol.tau0);
    for (std::size_t k = 1; k < samples.size(); ++k)
      CHECK(samples[k].x > samples[k - 1].x);
    CHECK(samples.back().x <= barrier.gap_length * (1 + 1e-12));

    const RealizationDrive drive(fr, 0.0);
    const double k = barrier.charge / barrier.mass;
    auto velocity = [&](double t) { return st.v.real() - k * drive.primitive_difference(t, sol.tau0).real(); };
    double ke_scale = 0.0;
    for (const auto& s : samples)
      ke_scale = std::max(ke_scale, 0.5 * barrier.mass * s.v * s.v);
    QuadratureControl ctl;
    ctl.rel_tol = 1e-12;
    ctl.abs_tol = 1e-10 * ke_scale;
    for (std::size_t j : {samples.size() / 3, samples.size() - 1}) {
      const auto& s = samples[j];
      const double work = integrate<double>(
        [&](double t) { return -barrier.charge * drive.field(t).real() * velocity(t); }, sol.tau0, s.t, ctl);
      const double dke = 0.5 * barrier.mass * (s.v * s.v - samples.front().v * samples.front().v);
      CHECK(std::abs(dke - work) <= 1e-6 * ke_scale);
    }
  }
}
