#include "bsv/ensemble.hpp"

#include "bsv/errors.hpp"
#include "bsv/gauss_kronrod.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

namespace bsv
{

namespace
{

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

// Golub-Welsch nodes and weights on [-1, 1].
void gauss_legendre(std::size_t n, std::vector<double>& x, std::vector<double>& w)
{
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 1; k < n; ++k) {
    const double kk = static_cast<double>(k);
    J(k, k - 1) = J(k - 1, k) = kk / std::sqrt(4.0 * kk * kk - 1.0);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  x.resize(n);
  w.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    x[k] = es.eigenvalues()(k);
    const double v = es.eigenvectors()(0, k);
    w[k] = 2.0 * v * v;
  }
}

double log_g(const SqueezingParams& p, double t_i, const ProbabilityFn& prob, double s)
{
  const double sig = sigma(t_i, p);
  const double pr = prob(s * sig);
  if (!(pr > 0.0))
    return neg_inf;
  return std::log(rho(s * sig, t_i, p)) + std::log(pr);
}

} // namespace

void QuadratureSpec::validate() const
{
  if (!(x_min_sigmas > 0.0) || !std::isfinite(x_min_sigmas))
    throw ValidationError("x_min_sigmas > 0");
  if (method == Method::fixed_gauss && (n_nodes < 2 || n_nodes > 4096))
    throw ValidationError("2 <= n_nodes <= 4096");
  if (!(rel_tol > 0.0) || rel_tol >= 1.0)
    throw ValidationError("0 < quadrature rel_tol < 1");
}

TunnelingModel::TunnelingModel(SqueezingParams p, double t_i, BarrierSpec b, ContourSpec contour,
                               NewtonOptions newton)
    : params_(p), t_i_(t_i), barrier_(b), contour_(contour), newton_(newton)
{
  params_.validate();
  barrier_.validate();
  contour_.validate();
}

TunnelSolution TunnelingModel::solve(double x_i)
{
  ++n_evaluations_;
  const FieldRealization fr{params_, x_i, t_i_};
  const double s = x_i / sigma(t_i_, params_);

  std::optional<SaddleGuess> cold;
  try {
    cold = initial_guess(fr, barrier_, contour_);
  } catch (const Error&) {
    ++n_failed_;
    return {};
  }

  auto attempt = [&](const SaddleGuess& g) -> std::optional<TunnelSolution> {
    try {
      TunnelSolution sol = solve_tunneling(fr, barrier_, contour_, g, newton_);
      return sol;
    } catch (const Error&) {
      return std::nullopt;
    }
  };

  // Nearest solved neighbour, if close enough in relative terms.
  std::optional<ComplexScalar> warm;
  if (!solved_.empty()) {
    auto hi = solved_.lower_bound(s);
    double best = std::numeric_limits<double>::infinity();
    if (hi != solved_.end() && std::abs(hi->first - s) < best) {
      best = std::abs(hi->first - s);
      warm = hi->second;
    }
    if (hi != solved_.begin()) {
      auto lo = std::prev(hi);
      if (std::abs(lo->first - s) < best) {
        best = std::abs(lo->first - s);
        warm = lo->second;
      }
    }
    if (best > 0.25 * std::abs(s))
      warm.reset();
  }

  std::optional<TunnelSolution> sol;
  if (warm) {
    SaddleGuess g = *cold;
    g.t0 = *warm;
    if (g.window && !(warm->real() > g.window->re_min && warm->real() < g.window->re_max))
      g.t0 = cold->t0;
    sol = attempt(g);
  }
  if (!sol)
    sol = attempt(*cold);
  if (!sol) {
    ++n_failed_;
    return {};
  }
  solved_[s] = sol->t0;
  return *sol;
}

double TunnelingModel::probability(double x_i)
{
  if (params_.r == 0.0) {
    ++n_evaluations_;
    return 0.0;
  }
  const TunnelSolution sol = solve(x_i);
  return sol.converged ? sol.probability : 0.0;
}

ProbabilityFn TunnelingModel::as_function()
{
  return [this](double x_i) { return probability(x_i); };
}

PTotal p_total(const SqueezingParams& p, double t_i, const ProbabilityFn& prob,
               const QuadratureSpec& q)
{
  p.validate();
  q.validate();
  const double sig = sigma(t_i, p);
  const double L = q.x_min_sigmas;
  // rho(X) dX in the scaled variable is the standard normal density.
  auto integrand = [&](double s) {
    if (s >= 0.0)
      return 0.0;
    const double pr = prob(s * sig);
    return pr == 0.0 ? 0.0 : rho(s * sig, t_i, p) * sig * pr;
  };

  PTotal out;
  out.tail_bound = 0.5 * std::erfc(L / std::numbers::sqrt2);
  if (q.method == QuadratureSpec::Method::adaptive) {
    QuadratureControl ctl;
    ctl.max_step = L / 4.0;
    ctl.rel_tol = q.rel_tol;
    ctl.abs_tol = std::numeric_limits<double>::min();
    ctl.max_panels = 2000;
    double err = 0.0;
    try {
      out.value = integrate<double>(integrand, -L, 0.0, ctl, &err);
    } catch (const NonConvergedQuadrature& e) {
      throw QuadratureNotConverged(std::string("ensemble average: ") + e.what());
    }
    out.error_estimate = err;
  } else {
    std::vector<double> x, w;
    gauss_legendre(q.n_nodes, x, w);
    double sum = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k)
      sum += w[k] * integrand(0.5 * L * (x[k] - 1.0));
    out.value = 0.5 * L * sum;
    out.error_estimate = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

PTotal p_total(TunnelingModel& model, const QuadratureSpec& q)
{
  const std::size_t e0 = model.n_evaluations();
  const std::size_t f0 = model.n_failed();
  PTotal out = p_total(model.params(), model.t_i(), model.as_function(), q);
  out.n_evaluations = model.n_evaluations() - e0;
  out.n_failed = model.n_failed() - f0;
  return out;
}

double p_total(const SqueezingParams& p, double t_i, const BarrierSpec& b, const QuadratureSpec& q)
{
  TunnelingModel model(p, t_i, b);
  return p_total(model, q).value;
}

XPeak find_x_peak(const SqueezingParams& p, double t_i, const ProbabilityFn& prob,
                  double x_min_sigmas, double tol_sigmas)
{
  p.validate();
  const double sig = sigma(t_i, p);
  constexpr int n_grid = 64;
  constexpr double s_min_frac = 1e-4;
  // Log-spaced in |s| from x_min_sigmas down to 1e-4 x_min_sigmas; ordered
  // by increasing s.
  std::vector<double> s(n_grid), f(n_grid);
  for (int k = 0; k < n_grid; ++k) {
    const double a = static_cast<double>(k) / (n_grid - 1);
    s[k] = -x_min_sigmas * std::pow(s_min_frac, a);
    f[k] = log_g(p, t_i, prob, s[k]);
  }
  const auto it = std::max_element(f.begin(), f.end());
  const int k = static_cast<int>(it - f.begin());
  if (*it == neg_inf)
    throw NoInteriorMax("rho P vanishes on the whole grid");
  if (k == 0)
    throw NoInteriorMax("rho P increases toward -x_min_sigmas; widen the bracket");
  if (k == n_grid - 1)
    throw NoInteriorMax("rho P increases toward X = 0");

  // log g is flat at the top, so comparing values pins the argmax only to
  // about sqrt(machine eps). Solve d log g / ds = 0 instead, with a central
  // difference whose noise is eps / h.
  auto slope = [&](double x) {
    const double h = 1e-5 * std::abs(x);
    return (log_g(p, t_i, prob, x + h) - log_g(p, t_i, prob, x - h)) / (2.0 * h);
  };
  const double a = s[k - 1], b = s[k + 1];
  const double fa = slope(a), fb = slope(b);
  double s_best = s[k];
  if (fa > 0.0 && fb < 0.0) {
    boost::uintmax_t iters = 200;
    const double tol = tol_sigmas;
    const auto br = boost::math::tools::toms748_solve(
      slope, a, b, fa, fb, [tol](double lo, double hi) { return hi - lo <= tol; }, iters);
    s_best = 0.5 * (br.first + br.second);
  } else {
    // Slope too noisy to bracket: fall back to golden-section on the values.
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = a, hi = b;
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    double fc = log_g(p, t_i, prob, c), fd = log_g(p, t_i, prob, d);
    while (hi - lo > tol_sigmas) {
      if (fc >= fd) {
        hi = d;
        d = c;
        fd = fc;
        c = hi - gr * (hi - lo);
        fc = log_g(p, t_i, prob, c);
      } else {
        lo = c;
        c = d;
        fc = fd;
        d = lo + gr * (hi - lo);
        fd = log_g(p, t_i, prob, d);
      }
    }
    s_best = fc >= fd ? c : d;
  }
  double f_best = log_g(p, t_i, prob, s_best);
  if (*it > f_best) {
    s_best = s[k];
    f_best = *it;
  }
  return {s_best * sig, std::exp(f_best)};
}

XPeak find_x_peak(const SqueezingParams& p, double t_i, const BarrierSpec& b)
{
  TunnelingModel model(p, t_i, b);
  return find_x_peak(p, t_i, model.as_function());
}

std::vector<double> x_levels(const SqueezingParams& p, double t_i, const ProbabilityFn& prob,
                             const XPeak& peak, const std::vector<double>& fractions,
                             double x_min_sigmas)
{
  const double sig = sigma(t_i, p);
  const double s_peak = peak.x_peak / sig;
  const double log_peak = std::log(peak.g_peak);
  const double s_left = -x_min_sigmas;
  const double f_left = log_g(p, t_i, prob, s_left) - log_peak;

  std::vector<double> out;
  out.reserve(fractions.size());
  for (const double frac : fractions) {
    if (!(frac > 0.0) || frac > 1.0)
      throw ValidationError("exit level fraction must be in (0, 1]");
    if (frac == 1.0) {
      out.push_back(peak.x_peak);
      continue;
    }
    const double target = std::log(frac);
    auto h = [&](double s) { return log_g(p, t_i, prob, s) - log_peak - target; };
    const double ha = f_left - target;
    const double hb = -target;
    if (!(ha < 0.0))
      throw RootNotBracketed("rho P stays above the level on [-x_min_sigmas, X_peak]");
    boost::uintmax_t iters = 200;
    const auto br = boost::math::tools::toms748_solve(
      h, s_left, s_peak, ha, hb, boost::math::tools::eps_tolerance<double>(42), iters);
    out.push_back(0.5 * (br.first + br.second) * sig);
  }
  return out;
}

std::vector<double> x_levels(const SqueezingParams& p, double t_i, const BarrierSpec& b,
                             const std::vector<double>& fractions)
{
  TunnelingModel model(p, t_i, b);
  const ProbabilityFn fn = model.as_function();
  const XPeak peak = find_x_peak(p, t_i, fn);
  return x_levels(p, t_i, fn, peak, fractions);
}

double e_peak(const SqueezingParams& p, double t_i, double x_peak)
{
  p.validate();
  if (p.r == 0.0 || x_peak == 0.0)
    return 0.0;
  const FieldRealization fr{p, x_peak, t_i};
  // |P| is symmetric about the quarter period after each edge.
  const double quarter = 0.5 * std::numbers::pi / p.omega;
  auto mag = [&](double log_d) { return std::abs(p_after_edge(fr, quarter * std::exp(log_d))); };
  constexpr int n_grid = 4000;
  const double lo = std::log(1e-30);
  std::vector<double> ld(n_grid), m(n_grid);
  for (int k = 0; k < n_grid; ++k) {
    ld[k] = lo * (1.0 - static_cast<double>(k) / (n_grid - 1));
    m[k] = mag(ld[k]);
  }
  const int k = static_cast<int>(std::max_element(m.begin(), m.end()) - m.begin());
  double a = ld[std::max(k - 1, 0)], b = ld[std::min(k + 1, n_grid - 1)];
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = mag(c), fd = mag(d);
  for (int it = 0; it < 200 && b - a > 1e-14; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = mag(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = mag(d);
    }
  }
  return p.field_scale * std::max({fc, fd, m[k]});
}

double gamma_peak(double e_peak_value, const BarrierSpec& b, double omega)
{
  if (!(e_peak_value > 0.0))
    throw DivisionByZeroField("gamma_peak: E_peak is zero");
  return omega * std::sqrt(2.0 * b.mass * b.delta_u) / (b.charge * e_peak_value);
}

ScanRow scan_row(double r, const SqueezingParams& p_template, double t_i, const BarrierSpec& b,
                 const QuadratureSpec& q, const ContourSpec& contour)
{
  ScanRow row;
  row.r = r;
  SqueezingParams p = p_template;
  p.r = r;
  try {
    p.validate();
    row.sigma = sigma(t_i, p);
    TunnelingModel model(p, t_i, b, contour);
    const ProbabilityFn fn = model.as_function();
    if (r > 0.0) {
      const XPeak peak = find_x_peak(p, t_i, fn, q.x_min_sigmas);
      row.x_peak = peak.x_peak;
      row.e_peak = e_peak(p, t_i, peak.x_peak);
      row.gamma_peak = gamma_peak(row.e_peak, b, p.omega);
    } else {
      row.x_peak = std::numeric_limits<double>::quiet_NaN();
      row.gamma_peak = std::numeric_limits<double>::infinity();
    }
    const PTotal pt = p_total(model, q);
    row.p_tot = pt.value;
    row.tail_bound = pt.tail_bound;
    row.error_estimate = pt.error_estimate;
    row.n_failed_nodes = pt.n_failed;
    row.n_nodes = pt.n_evaluations;
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
  }
  return row;
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& body)
{
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i)
      body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++)
        body(i);
    });
  for (auto& t : pool)
    t.join();
}

ScanResult scan_r(std::vector<double> r_list, const SqueezingParams& p_template, double t_i,
                  const BarrierSpec& b, const QuadratureSpec& q, const ContourSpec& contour,
                  std::size_t workers)
{
  b.validate();
  q.validate();
  contour.validate();
  std::sort(r_list.begin(), r_list.end());
  ScanResult res{p_template, t_i, b, q, {}};
  res.rows.resize(r_list.size());
  parallel_for(r_list.size(), workers, [&](std::size_t i) {
    res.rows[i] = scan_row(r_list[i], p_template, t_i, b, q, contour);
  });
  return res;
}

std::vector<TunnelScanRow> tunnel_scan(const SqueezingParams& p, double t_i, const BarrierSpec& b,
                                       std::size_t n_points, double x_min_sigmas,
                                       const ContourSpec& contour)
{
  TunnelingModel model(p, t_i, b, contour);
  const double sig = sigma(t_i, p);
  std::vector<TunnelScanRow> rows;
  rows.reserve(n_points);
  for (std::size_t k = 0; k < n_points; ++k) {
    const double x =
      -x_min_sigmas * sig * (1.0 - static_cast<double>(k) / static_cast<double>(n_points));
    TunnelScanRow row{x, rho(x, t_i, p), 0.0, 0.0, {0.0, 0.0}, 0.0, false};
    if (p.r > 0.0) {
      const TunnelSolution sol = model.solve(x);
      row.converged = sol.converged;
      if (sol.converged) {
        row.probability = sol.probability;
        row.t0 = sol.t0;
        row.im_s = sol.im_action;
      }
    } else {
      row.converged = true;
      row.im_s = std::numeric_limits<double>::infinity();
    }
    row.rho_p = row.rho * row.probability;
    rows.push_back(row);
  }
  return rows;
}

} // namespace bsv
