#ifndef BSV_QUANTUM_FIELD_HPP
#define BSV_QUANTUM_FIELD_HPP

// Closed-form Bohmian dynamics of a single-mode squeezed vacuum.
//
// All quantities are in atomic units (hbar = m_e = |e| = 1). The squeezing
// phase enters through theta(t) = phi - 2 omega t, and the key auxiliary
// function is
//
//   u(t) = 1 / c_r(t) = cosh 2r + sinh 2r cos theta
//        = e^{2r} cos^2(theta/2) + e^{-2r} sin^2(theta/2),
//
// evaluated in the second form so that nothing cancels near the field edges.
// Bohmian trajectories scale with the instantaneous width,
// X(t) = x_i sqrt(u(t) / u(t_i)), and P(t) = Xdot / omega.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace bsv
{

using ComplexScalar = std::complex<double>;

namespace units
{
constexpr double hartree_ev = 27.211386;
constexpr double bohr_nm = 0.0529177210903;
} // namespace units

struct SqueezingParams
{
  double r = 0.0;
  double phi = 0.0;
  double omega = 0.0285;
  double field_scale = 1.4142135623730951e-8; // sqrt(2) x 1e-8

  /// Throws ValidationError naming the violated invariant.
  void validate() const;
  bool operator==(const SqueezingParams&) const = default;
};

struct FieldRealization
{
  SqueezingParams params;
  double x_i = 0.0;
  double t_i = 0.0;
};

double c_coeff(double t, const SqueezingParams& p);
double c_r_coeff(double t, const SqueezingParams& p);

/// Gaussian quadrature density rho(X, t) with variance 1 / (2 c_r(t)).
double rho(double x, double t, const SqueezingParams& p);

/// Standard deviation of rho(., t).
double sigma(double t, const SqueezingParams& p);

double x_trajectory(const FieldRealization& fr, double t);
double p_trajectory(const FieldRealization& fr, double t);
double e_field(const FieldRealization& fr, double t);

/// Analytic continuation of the field to complex time. The branch of sqrt(u)
/// is the continuation from the real axis along a vertical line, which
/// coincides with the principal branch; the cuts run vertically from the
/// zeros of u at Re t = edge_time(p, n). Throws BranchAmbiguity when t lies
/// within guard_radius of a cut.
ComplexScalar e_field(const FieldRealization& fr, ComplexScalar t, double guard_radius = 0.0);

/// Continuation of X(t) on the same branch as e_field. Since Xdot = omega P,
/// field_scale * x_trajectory / omega is a primitive of e_field.
ComplexScalar x_trajectory(const FieldRealization& fr, ComplexScalar t, double guard_radius = 0.0);

/// X(t) - X(t0) on the branch of x_trajectory, without cancelling the
/// two (possibly huge) endpoint values.
ComplexScalar x_difference(const FieldRealization& fr, ComplexScalar t, ComplexScalar t0,
                           double guard_radius = 0.0);

/// P at time offset d after any field edge (all edges are equivalent by the
/// pi/omega periodicity). Exact for tiny d, where edge_time(p, n) + d would
/// round away the offset.
double p_after_edge(const FieldRealization& fr, double d);

/// Real times where the field jumps for large r (zeros of u sit just off
/// the real axis there). Increasing in n; with phi = 0,
/// edge_time(p, 1) = pi / (2 omega).
double edge_time(const SqueezingParams& p, long n);

/// Index of the first edge strictly after t.
long next_edge_index(const SqueezingParams& p, double t);

/// Distance from t to the nearest branch cut of the continued field;
/// +infinity for r = 0.
double distance_to_cut(const SqueezingParams& p, ComplexScalar t);

/// Height |Im t| of the branch points above and below each edge.
double branch_point_height(const SqueezingParams& p);

/// n i.i.d. draws from rho(., t_i). With negative_only, each draw is
/// replaced by -|draw|, which is exact because rho is even.
std::vector<double> sample_initial(const SqueezingParams& p, double t_i, std::size_t n,
                                   std::uint64_t seed, bool negative_only);

} // namespace bsv

#endif
