#include "bsv/quantum_field.hpp"

#include "bsv/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace bsv
{

namespace
{

using std::numbers::pi;

struct Phase
{
  ComplexScalar u;       // 1 / c_r
  ComplexScalar sin_th;  // sin theta
};

template <typename T>
Phase phase_terms(T t, const SqueezingParams& p)
{
  const ComplexScalar theta = ComplexScalar(p.phi) - 2.0 * p.omega * ComplexScalar(t);
  const ComplexScalar ch = std::cos(0.5 * theta);
  const ComplexScalar sh = std::sin(0.5 * theta);
  const double up = std::exp(2.0 * p.r);
  const double dn = std::exp(-2.0 * p.r);
  return {up * ch * ch + dn * sh * sh, 2.0 * sh * ch};
}

double u_real(double t, const SqueezingParams& p)
{
  const double theta = p.phi - 2.0 * p.omega * t;
  const double ch = std::cos(0.5 * theta);
  const double sh = std::sin(0.5 * theta);
  return std::exp(2.0 * p.r) * ch * ch + std::exp(-2.0 * p.r) * sh * sh;
}

void guard(const SqueezingParams& p, ComplexScalar t, double radius)
{
  if (radius <= 0.0 || t.imag() == 0.0)
    return;
  const double d = distance_to_cut(p, t);
  if (d < radius) {
    std::ostringstream os;
    os << "t = (" << t.real() << ", " << t.imag() << ") lies " << d
       << " from a branch cut of the continued field (guard " << radius << ")";
    throw BranchAmbiguity(os.str());
  }
}

} // namespace

void SqueezingParams::validate() const
{
  if (!(r >= 0.0) || !std::isfinite(r))
    throw ValidationError("r >= 0");
  if (!(omega > 0.0) || !std::isfinite(omega))
    throw ValidationError("omega > 0");
  if (!(field_scale > 0.0) || !std::isfinite(field_scale))
    throw ValidationError("field_scale > 0");
  if (!std::isfinite(phi))
    throw ValidationError("phi finite");
}

double c_coeff(double t, const SqueezingParams& p)
{
  const double theta = p.phi - 2.0 * p.omega * t;
  return -std::sin(theta) * std::sinh(2.0 * p.r) / u_real(t, p);
}

double c_r_coeff(double t, const SqueezingParams& p) { return 1.0 / u_real(t, p); }

double rho(double x, double t, const SqueezingParams& p)
{
  const double cr = c_r_coeff(t, p);
  return std::sqrt(cr / pi) * std::exp(-cr * x * x);
}

double sigma(double t, const SqueezingParams& p) { return std::sqrt(0.5 * u_real(t, p)); }

double x_trajectory(const FieldRealization& fr, double t)
{
  return fr.x_i * std::sqrt(u_real(t, fr.params) / u_real(fr.t_i, fr.params));
}

double p_trajectory(const FieldRealization& fr, double t)
{
  // P = -c X, written so that the small cos(theta/2) near an edge cancels
  // between numerator and sqrt(u).
  const auto& p = fr.params;
  const double theta = p.phi - 2.0 * p.omega * t;
  return fr.x_i * std::sinh(2.0 * p.r) * std::sin(theta)
         / std::sqrt(u_real(t, p) * u_real(fr.t_i, p));
}

double e_field(const FieldRealization& fr, double t)
{
  return fr.params.field_scale * p_trajectory(fr, t);
}

ComplexScalar e_field(const FieldRealization& fr, ComplexScalar t, double guard_radius)
{
  const auto& p = fr.params;
  guard(p, t, guard_radius);
  const Phase ph = phase_terms(t, p);
  return p.field_scale * fr.x_i * std::sinh(2.0 * p.r) * ph.sin_th
         / (std::sqrt(ph.u) * std::sqrt(u_real(fr.t_i, p)));
}

ComplexScalar x_trajectory(const FieldRealization& fr, ComplexScalar t, double guard_radius)
{
  const auto& p = fr.params;
  guard(p, t, guard_radius);
  return fr.x_i * std::sqrt(phase_terms(t, p).u) / std::sqrt(u_real(fr.t_i, p));
}

double p_after_edge(const FieldRealization& fr, double d)
{
  // At an edge theta/2 = pi/2 - n pi, so cos(theta/2) = +-sin(omega d) and
  // sin(theta/2) = +-cos(omega d) with a common sign.
  const auto& p = fr.params;
  const double s = std::sin(p.omega * d);
  const double c = std::cos(p.omega * d);
  const double u = std::exp(2.0 * p.r) * s * s + std::exp(-2.0 * p.r) * c * c;
  return fr.x_i * std::sinh(2.0 * p.r) * std::sin(2.0 * p.omega * d)
         / std::sqrt(u * u_real(fr.t_i, p));
}

ComplexScalar x_difference(const FieldRealization& fr, ComplexScalar t, ComplexScalar t0,
                           double guard_radius)
{
  const auto& p = fr.params;
  guard(p, t, guard_radius);
  guard(p, t0, guard_radius);
  // u(t) - u(t0) = sinh 2r (cos th - cos th0) = -2 sinh 2r sin((th+th0)/2) sin((th-th0)/2)
  const ComplexScalar th = ComplexScalar(p.phi) - 2.0 * p.omega * t;
  const ComplexScalar th0 = ComplexScalar(p.phi) - 2.0 * p.omega * t0;
  const ComplexScalar du =
    -2.0 * std::sinh(2.0 * p.r) * std::sin(0.5 * (th + th0)) * std::sin(0.5 * (th - th0));
  const ComplexScalar s = std::sqrt(phase_terms(t, p).u);
  const ComplexScalar s0 = std::sqrt(phase_terms(t0, p).u);
  return fr.x_i * du / ((s + s0) * std::sqrt(u_real(fr.t_i, p)));
}

double edge_time(const SqueezingParams& p, long n)
{
  return (p.phi - pi + 2.0 * pi * static_cast<double>(n)) / (2.0 * p.omega);
}

long next_edge_index(const SqueezingParams& p, double t)
{
  long n = static_cast<long>(std::floor((2.0 * p.omega * t - p.phi + pi) / (2.0 * pi))) + 1;
  while (edge_time(p, n - 1) > t)
    --n;
  while (edge_time(p, n) <= t)
    ++n;
  return n;
}

double branch_point_height(const SqueezingParams& p)
{
  if (p.r == 0.0)
    return std::numeric_limits<double>::infinity();
  // arccosh(coth 2r) = log1p(x + sqrt(x (x + 2))) with x = coth 2r - 1.
  const double x = 2.0 / std::expm1(4.0 * p.r);
  return std::log1p(x + std::sqrt(x * (x + 2.0))) / (2.0 * p.omega);
}

double distance_to_cut(const SqueezingParams& p, ComplexScalar t)
{
  if (p.r == 0.0)
    return std::numeric_limits<double>::infinity();
  const long n = next_edge_index(p, t.real());
  const double d_re = std::min(std::abs(t.real() - edge_time(p, n)),
                               std::abs(t.real() - edge_time(p, n - 1)));
  const double b = branch_point_height(p);
  const double over = std::abs(t.imag()) - b;
  return over >= 0.0 ? d_re : std::hypot(d_re, over);
}

std::vector<double> sample_initial(const SqueezingParams& p, double t_i, std::size_t n,
                                   std::uint64_t seed, bool negative_only)
{
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist(0.0, sigma(t_i, p));
  std::vector<double> out(n);
  for (auto& x : out) {
    x = dist(gen);
    if (negative_only)
      x = -std::abs(x);
  }
  return out;
}

} // namespace bsv
