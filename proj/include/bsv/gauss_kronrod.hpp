#ifndef BSV_GAUSS_KRONROD_HPP
#define BSV_GAUSS_KRONROD_HPP

// Globally adaptive 7/15-point Gauss-Kronrod quadrature along a straight
// segment [a, b] of the real line or the complex plane. The integrand may
// return a scalar or a std::array of scalars; all components share the
// subdivision, and the error test uses the max-norm over components.

#include "bsv/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <queue>
#include <sstream>
#include <vector>

namespace bsv
{

struct QuadratureControl
{
  double max_step = 10.0; // initial panels are no longer than this
  double abs_tol = 1e-14;
  double rel_tol = 1e-13;
  std::size_t max_panels = 4000;
};

namespace gk_detail
{

constexpr std::array<double, 8> xgk = {
  0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
  0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
  0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
  0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> wgk = {
  0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
  0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
  0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
  0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights at xgk[1], xgk[3], xgk[5], xgk[7]
constexpr std::array<double, 4> wg = {
  0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
  0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

inline double norm(double v) { return std::abs(v); }
inline double norm(std::complex<double> v) { return std::abs(v); }
template <typename T, std::size_t N>
double norm(const std::array<T, N>& v)
{
  double m = 0.0;
  for (const auto& x : v)
    m = std::max(m, norm(x));
  return m;
}

template <typename V, typename S>
V scale(const V& v, S s)
{
  if constexpr (requires { v * s; })
    return v * s;
  else {
    V out = v;
    for (auto& x : out)
      x *= s;
    return out;
  }
}

template <typename V>
V add(const V& a, const V& b)
{
  if constexpr (requires { a + b; })
    return a + b;
  else {
    V out = a;
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] += b[i];
    return out;
  }
}

template <typename V>
V sub(const V& a, const V& b)
{
  return add(a, scale(b, -1.0));
}

template <typename V, typename P>
struct Panel
{
  P a, b;
  V value;
  double error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <typename V, typename P, typename F>
Panel<V, P> gk15(F& f, P a, P b)
{
  const P center = 0.5 * (a + b);
  const P half = 0.5 * (b - a);
  V fc = f(center);
  V kron = scale(fc, wgk[7]);
  V gauss = scale(fc, wg[3]);
  for (std::size_t j = 0; j < 7; ++j) {
    const P dx = half * xgk[j];
    const V s = add(f(center - dx), f(center + dx));
    kron = add(kron, scale(s, wgk[j]));
    if (j % 2 == 1)
      gauss = add(gauss, scale(s, wg[j / 2]));
  }
  kron = scale(kron, half);
  gauss = scale(gauss, half);
  return {a, b, kron, norm(sub(kron, gauss))};
}

} // namespace gk_detail

/// Integrates f from a to b. Throws NonConvergedQuadrature when the panel
/// budget runs out before the error estimate meets the tolerance. The final
/// error estimate goes to *error_out when given.
template <typename V, typename P, typename F>
V integrate(F&& f, P a, P b, const QuadratureControl& ctl = {}, double* error_out = nullptr)
{
  using Panel = gk_detail::Panel<V, P>;
  const double length = std::abs(b - a);
  if (error_out)
    *error_out = 0.0;
  if (length == 0.0)
    return gk_detail::scale(f(a), 0.0);

  const auto n0 = static_cast<std::size_t>(
    std::max(1.0, std::ceil(length / std::max(ctl.max_step, 1e-300))));
  std::priority_queue<Panel> queue;
  V total{};
  double error = 0.0;
  for (std::size_t k = 0; k < n0; ++k) {
    const P pa = a + (b - a) * (static_cast<double>(k) / static_cast<double>(n0));
    const P pb = k + 1 == n0 ? b : a + (b - a) * (static_cast<double>(k + 1) / static_cast<double>(n0));
    Panel p = gk_detail::gk15<V>(f, pa, pb);
    total = gk_detail::add(total, p.value);
    error += p.error;
    queue.push(p);
  }

  while (error > std::max(ctl.abs_tol, ctl.rel_tol * gk_detail::norm(total))) {
    if (queue.size() >= ctl.max_panels) {
      std::ostringstream os;
      os << "adaptive quadrature exhausted " << ctl.max_panels << " panels (error " << error
         << ", |integral| " << gk_detail::norm(total) << ")";
      throw NonConvergedQuadrature(os.str());
    }
    Panel worst = queue.top();
    queue.pop();
    const P mid = 0.5 * (worst.a + worst.b);
    Panel left = gk_detail::gk15<V>(f, worst.a, mid);
    Panel right = gk_detail::gk15<V>(f, mid, worst.b);
    total = gk_detail::add(total, gk_detail::sub(gk_detail::add(left.value, right.value), worst.value));
    error += left.error + right.error - worst.error;
    queue.push(left);
    queue.push(right);
  }

  if (error_out)
    *error_out = error;
  // Re-sum from the panels to shed accumulated update round-off.
  V sum{};
  while (!queue.empty()) {
    sum = gk_detail::add(sum, queue.top().value);
    queue.pop();
  }
  return sum;
}

} // namespace bsv

#endif
