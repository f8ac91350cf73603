#include "bsv/tunneling_solver.hpp"

#include "bsv/errors.hpp"
#include "bsv/gauss_kronrod.hpp"

#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

namespace bsv
{

namespace
{

constexpr ComplexScalar I{0.0, 1.0};

using Pair = std::array<ComplexScalar, 2>;

QuadratureControl control_for(const ContourSpec& c)
{
  QuadratureControl ctl;
  ctl.max_step = c.max_step;
  ctl.rel_tol = c.rel_tol;
  ctl.abs_tol = 1e-16;
  return ctl;
}

double norm2(const std::array<double, 2>& r) { return std::hypot(r[0], r[1]); }

} // namespace

void BarrierSpec::validate() const
{
  if (!(delta_u > 0.0))
    throw ValidationError("delta_u > 0");
  if (!(mass > 0.0))
    throw ValidationError("mass > 0");
  if (!(charge > 0.0))
    throw ValidationError("charge > 0");
  if (!(gap_length > 0.0))
    throw ValidationError("gap_length > 0");
}

double BarrierSpec::launch_speed() const { return std::sqrt(2.0 * delta_u / mass); }

void ContourSpec::validate() const
{
  if (!(max_step > 0.0))
    throw ValidationError("max_step > 0");
  if (!(branch_guard_radius >= 0.0))
    throw ValidationError("branch_guard_radius >= 0");
  if (!(rel_tol > 0.0))
    throw ValidationError("contour rel_tol > 0");
}

ContourState complex_trajectory(const Drive& drive, const BarrierSpec& b, ComplexScalar t0,
                                const ContourSpec& contour, std::optional<double> t_end)
{
  const double tau0 = t0.real();
  const double end = t_end.value_or(tau0);
  const double v0 = b.launch_speed();
  const double k = b.charge / b.mass;
  auto velocity = [&](ComplexScalar t) { return I * v0 - k * drive.primitive_difference(t, t0); };
  auto integrand = [&](ComplexScalar t) -> Pair {
    const ComplexScalar v = velocity(t);
    return {v, v * v};
  };

  ComplexScalar landing = tau0;
  if (contour.shape == ContourSpec::Shape::straight_line) {
    const double reach = drive.analytic_reach(tau0);
    landing = tau0 + std::min(t0.imag(), 0.5 * reach);
  }

  QuadratureControl ctl = control_for(contour);
  ctl.abs_tol = 1e-2 * contour.rel_tol * v0 * std::max(std::abs(landing - t0), std::abs(end - landing));
  Pair total = integrate<Pair>(integrand, t0, landing, ctl);
  if (ComplexScalar(end) != landing) {
    const Pair tail = integrate<Pair>(integrand, landing, ComplexScalar(end), ctl);
    total[0] += tail[0];
    total[1] += tail[1];
  }

  ContourState st;
  st.x = total[0];
  st.v = velocity(end);
  st.lagrangian_integral = b.mass * st.x * st.v - 0.5 * b.mass * total[1];
  return st;
}

ContourState complex_trajectory(const FieldRealization& fr, const BarrierSpec& b,
                                ComplexScalar t0, const ContourSpec& contour)
{
  return complex_trajectory(RealizationDrive(fr, contour.branch_guard_radius), b, t0, contour);
}

std::array<double, 2> exit_residual(const Drive& drive, const BarrierSpec& b, ComplexScalar t0,
                                    const ContourSpec& contour)
{
  const ContourState st = complex_trajectory(drive, b, t0, contour);
  return {st.x.imag(), st.v.imag()};
}

std::array<double, 2> exit_residual(const FieldRealization& fr, const BarrierSpec& b,
                                    ComplexScalar t0, const ContourSpec& contour)
{
  return exit_residual(RealizationDrive(fr, contour.branch_guard_radius), b, t0, contour);
}

double keldysh_time(double field_abs, double omega, const BarrierSpec& b)
{
  const double adiabatic = std::sqrt(2.0 * b.mass * b.delta_u) / (b.charge * field_abs);
  if (omega == 0.0)
    return adiabatic;
  return std::asinh(omega * adiabatic) / omega;
}

SaddleGuess initial_guess(const FieldRealization& fr, const BarrierSpec& b,
                          const ContourSpec& /*contour*/)
{
  const auto& p = fr.params;
  p.validate();
  b.validate();
  if (p.r == 0.0)
    throw NoValidWindow("unsqueezed mode: the field realization vanishes identically");
  if (!(std::abs(fr.x_i) > 1e-12 * sigma(fr.t_i, p)))
    throw NoValidWindow("degenerate realization: |x_i| <= 1e-12 sigma carries no field");

  const double quarter = std::numbers::pi / (2.0 * p.omega);
  const long n = next_edge_index(p, fr.t_i);
  for (long k = n; k <= n + 1; ++k) {
    const double edge = edge_time(p, k);
    const double node = edge + quarter;
    if (e_field(fr, 0.5 * (edge + node)) >= 0.0)
      continue;
    // start 1% of the optical period past the edge
    const double re = edge + 0.01 * 4.0 * quarter;
    const double field = std::abs(e_field(fr, re));
    const double im = keldysh_time(field, p.omega, b);
    return {ComplexScalar(re, im), ExitWindow{edge, node}};
  }
  throw NoValidWindow("the field never pushes the electron toward the surface after an edge "
                      "(x_i > 0 realization?)");
}

TunnelSolution try_solve_saddle(const Drive& drive, const BarrierSpec& b,
                                const ContourSpec& contour, const SaddleGuess& guess,
                                const NewtonOptions& opts)
{
  // Residual plus a merit value. The merit divides Im x by the exit
  // distance and Im v by the launch speed (each capped at 1), so strong
  // fields with sub-1e-4 exit points still have to land on the real axis.
  struct Eval
  {
    std::array<double, 2> r;
    double merit;
    double x_scale;
  };
  using Res = std::optional<Eval>;
  const double v_scale = std::min(1.0, b.launch_speed());
  auto residual = [&](double re, double im) -> Res {
    try {
      const ContourState st = complex_trajectory(drive, b, ComplexScalar(re, im), contour);
      const double x_scale = std::min(1.0, std::abs(st.x.real()));
      const std::array<double, 2> r{st.x.imag(), st.v.imag()};
      const double merit = x_scale > 0.0 ? std::hypot(r[0] / x_scale, r[1] / v_scale)
                                         : std::numeric_limits<double>::infinity();
      return Eval{r, merit, x_scale};
    } catch (const BranchAmbiguity&) {
      return std::nullopt;
    } catch (const NonConvergedQuadrature&) {
      return std::nullopt;
    }
  };

  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  if (guess.window) {
    const double pad = 10.0 * contour.branch_guard_radius;
    lo = guess.window->re_min + pad;
    hi = guess.window->re_max - pad;
  }

  double re = std::clamp(guess.t0.real(), lo, hi);
  double im = guess.t0.imag();

  TunnelSolution sol;
  sol.residual_norm = std::numeric_limits<double>::infinity();
  auto finish = [&](int it) {
    sol.t0 = ComplexScalar(re, im);
    sol.tau0 = re;
    sol.iterations = it;
    return sol;
  };

  Res r = residual(re, im);
  for (int it = 0;; ++it) {
    if (!r)
      return finish(it);
    sol.residual_norm = norm2(r->r);
    if (r->merit < opts.tol) {
      sol.converged = true;
      return finish(it);
    }
    if (it >= opts.max_iterations)
      return finish(it);

    const double h = opts.fd_rel_step * std::max(1.0, std::abs(ComplexScalar(re, im)));
    // Short tunneling times put all the structure within Im t0 of the axis.
    const double h_im = std::min(h, 1e-4 * im);
    Eigen::Matrix2d jac;
    // d/d(Re t0): one-sided next to the window edges (the branch cut sits
    // there). For short tunneling times the residual is nearly flat in
    // Re t0, so the step grows until the difference clears quadrature noise.
    {
      const double width = std::isfinite(hi - lo) ? hi - lo : std::numeric_limits<double>::infinity();
      double h_re = h;
      for (int grow = 0;; ++grow) {
        Res fp, fm;
        double span;
        if (re - h_re <= lo) {
          fp = residual(re + h_re, im);
          fm = r;
          span = h_re;
        } else if (re + h_re >= hi) {
          fp = r;
          fm = residual(re - h_re, im);
          span = h_re;
        } else {
          fp = residual(re + h_re, im);
          fm = residual(re - h_re, im);
          span = 2.0 * h_re;
        }
        if (!fp || !fm)
          return finish(it);
        jac(0, 0) = (fp->r[0] - fm->r[0]) / span;
        jac(1, 0) = (fp->r[1] - fm->r[1]) / span;
        const double signal = std::hypot((fp->r[0] - fm->r[0]) / r->x_scale,
                                         (fp->r[1] - fm->r[1]) / v_scale);
        if (signal > 1e-9 || grow >= 6 || 10.0 * h_re > 0.1 * width)
          break;
        h_re *= 10.0;
      }
    }
    {
      Res fp, fm;
      double span;
      fp = residual(re, im + h_im);
      fm = residual(re, im - h_im);
      span = 2.0 * h_im;
      if (!fp || !fm)
        return finish(it);
      jac(0, 1) = (fp->r[0] - fm->r[0]) / span;
      jac(1, 1) = (fp->r[1] - fm->r[1]) / span;
    }

    // Rows and columns have wildly different scales for short tunneling
    // times, so conditioning is judged on the determinant terms only.
    Eigen::Vector2d step;
    const Eigen::Vector2d rhs(-r->r[0], -r->r[1]);
    const double det = jac.determinant();
    const double det_scale = std::abs(jac(0, 0) * jac(1, 1)) + std::abs(jac(0, 1) * jac(1, 0));
    if (std::abs(det) > 1e-12 * det_scale) {
      step << (jac(1, 1) * rhs(0) - jac(0, 1) * rhs(1)) / det,
        (jac(0, 0) * rhs(1) - jac(1, 0) * rhs(0)) / det;
    } else {
      Eigen::CompleteOrthogonalDecomposition<Eigen::Matrix2d> cod(jac);
      cod.setThreshold(1e-10);
      step = cod.solve(rhs);
    }

    double alpha = 1.0;
    if (re + step(0) <= lo)
      alpha = std::min(alpha, opts.boundary_fraction * (re - lo) / -step(0));
    if (re + step(0) >= hi)
      alpha = std::min(alpha, opts.boundary_fraction * (hi - re) / step(0));
    if (im + step(1) <= 0.0)
      alpha = std::min(alpha, opts.boundary_fraction * im / -step(1));

    // Second-order correction: re-zero Im v along Im t0 at the trial point,
    // since curvature in Re t0 otherwise forces tiny steps toward an exit
    // window edge.
    auto corrected = [&](double tre, double tim) -> std::pair<Res, double> {
      Res t = residual(tre, tim);
      for (int c = 0; c < 2 && t && jac(1, 1) != 0.0; ++c) {
        const double nt = tim - t->r[1] / jac(1, 1);
        if (!(nt > 0.0))
          break;
        Res t2 = residual(tre, nt);
        if (!t2 || t2->merit >= t->merit)
          break;
        tim = nt;
        t = t2;
      }
      return {t, tim};
    };

    bool accepted = false;
    for (int k = 0; k <= opts.max_halvings; ++k, alpha *= 0.5) {
      const double tre = re + alpha * step(0);
      auto [trial, tim] = corrected(tre, im + alpha * step(1));
      if (trial && trial->merit < r->merit) {
        re = tre;
        im = tim;
        r = trial;
        accepted = true;
        break;
      }
    }
    if (!accepted)
      return finish(it + 1);
  }
}

TunnelSolution solve_saddle(const Drive& drive, const BarrierSpec& b, const ContourSpec& contour,
                            const SaddleGuess& guess, const NewtonOptions& opts)
{
  TunnelSolution sol = try_solve_saddle(drive, b, contour, guess, opts);
  if (!sol.converged) {
    std::ostringstream os;
    os << "saddle search stopped after " << sol.iterations << " iterations at t0 = ("
       << sol.t0.real() << ", " << sol.t0.imag() << ") with residual " << sol.residual_norm;
    throw NotConverged(os.str());
  }
  if (!(sol.t0.imag() > 0.0))
    throw SignViolation("converged saddle has Im t0 <= 0");
  return sol;
}

TunnelSolution solve_saddle(const FieldRealization& fr, const BarrierSpec& b,
                            const ContourSpec& contour, std::optional<SaddleGuess> guess,
                            const NewtonOptions& opts)
{
  const SaddleGuess g = guess ? *guess : initial_guess(fr, b, contour);
  return solve_saddle(RealizationDrive(fr, contour.branch_guard_radius), b, contour, g, opts);
}

double im_action(const Drive& drive, const BarrierSpec& b, const TunnelSolution& sol,
                 const ContourSpec& contour)
{
  const ContourState st = complex_trajectory(drive, b, sol.t0, contour);
  // E = H(t0) = -delta_u, and S carries -E t0.
  const double value = st.lagrangian_integral.imag() + b.delta_u * sol.t0.imag();
  if (value < 0.0) {
    std::ostringstream os;
    os << "Im S = " << value << " < 0 at t0 = (" << sol.t0.real() << ", " << sol.t0.imag()
       << "): wrong saddle branch";
    throw NegativeImAction(os.str());
  }
  return value;
}

double im_action(const FieldRealization& fr, const BarrierSpec& b, const TunnelSolution& sol,
                 const ContourSpec& contour)
{
  return im_action(RealizationDrive(fr, contour.branch_guard_radius), b, sol, contour);
}

TunnelSolution solve_tunneling(const FieldRealization& fr, const BarrierSpec& b,
                               const ContourSpec& contour, std::optional<SaddleGuess> guess,
                               const NewtonOptions& opts)
{
  const RealizationDrive drive(fr, contour.branch_guard_radius);
  const SaddleGuess g = guess ? *guess : initial_guess(fr, b, contour);
  TunnelSolution sol = solve_saddle(drive, b, contour, g, opts);
  sol.im_action = im_action(drive, b, sol, contour);
  sol.probability = std::exp(-2.0 * sol.im_action);
  return sol;
}

double tunnel_probability(double x_i, const SqueezingParams& p, double t_i, const BarrierSpec& b)
{
  p.validate();
  if (p.r == 0.0)
    return 0.0;
  if (x_i >= 0.0)
    throw NoValidWindow("x_i >= 0: the realization drags the electron back to the tip");
  return solve_tunneling(FieldRealization{p, x_i, t_i}, b).probability;
}

std::vector<ExitSample> exit_trajectory(const Drive& drive, const BarrierSpec& b,
                                        const TunnelSolution& sol, double t_max,
                                        std::size_t n_samples, const ContourSpec& contour)
{
  const double tau0 = sol.t0.real();
  const ContourState st = complex_trajectory(drive, b, sol.t0, contour);
  const double x0 = st.x.real();
  const double v_exit = st.v.real();
  const double k = b.charge / b.mass;
  auto velocity = [&](double t) {
    return v_exit - k * drive.primitive_difference(t, tau0).real();
  };
  QuadratureControl ctl = control_for(contour);
  ctl.abs_tol = contour.rel_tol * b.gap_length;
  auto advance = [&](double x, double from, double to) {
    return x + integrate<double>(velocity, from, to, ctl);
  };

  if (!(t_max > tau0) || n_samples < 2)
    return {{tau0, x0, v_exit}};

  // Locate the arrival at gap_length, if it happens before t_max.
  double t_end = t_max;
  {
    const double dt = std::min(contour.max_step, (t_max - tau0) / 64.0);
    double t = tau0;
    double x = x0;
    while (t < t_max) {
      const double next = std::min(t + dt, t_max);
      const double xn = advance(x, t, next);
      if (xn >= b.gap_length && x < b.gap_length) {
        boost::uintmax_t iters = 200;
        const auto bracket = boost::math::tools::toms748_solve(
          [&](double s) { return advance(x, t, s) - b.gap_length; }, t, next, x - b.gap_length,
          xn - b.gap_length, boost::math::tools::eps_tolerance<double>(50), iters);
        t_end = 0.5 * (bracket.first + bracket.second);
        break;
      }
      t = next;
      x = xn;
    }
  }

  std::vector<ExitSample> out;
  out.reserve(n_samples);
  double x = x0;
  double prev = tau0;
  for (std::size_t j = 0; j < n_samples; ++j) {
    const double t = j + 1 == n_samples
                       ? t_end
                       : tau0 + (t_end - tau0) * static_cast<double>(j) / static_cast<double>(n_samples - 1);
    x = advance(x, prev, t);
    prev = t;
    out.push_back({t, x, velocity(t)});
  }
  return out;
}

std::vector<ExitSample> exit_trajectory(const FieldRealization& fr, const BarrierSpec& b,
                                        const TunnelSolution& sol, double t_max,
                                        std::size_t n_samples, const ContourSpec& contour)
{
  return exit_trajectory(RealizationDrive(fr, contour.branch_guard_radius), b, sol, t_max,
                         n_samples, contour);
}

} // namespace bsv
