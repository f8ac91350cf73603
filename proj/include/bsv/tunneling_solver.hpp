#ifndef BSV_TUNNELING_SOLVER_HPP
#define BSV_TUNNELING_SOLVER_HPP

// Quasiclassical (complex-time) tunneling through a flat barrier of height
// delta_u driven by a classical field E(t).
//
// The electron starts at x = 0 at complex time t0 with velocity
// i sqrt(2 delta_u / m) and obeys m xddot = F(t) = -charge E(t) in the gap.
// The saddle t0 is fixed by requiring x and xdot to be real where the
// contour lands on the real axis, tau0 = Re t0. The tunneling probability
// (exponential accuracy, hbar = 1) is exp(-2 Im S) with
//
//   S = \int_{t0}^{tau0} L dt + delta_u t0,   L = m v^2 / 2 + x F.
//
// With F = m vdot, \int L dt = m x v - (m/2) \int v^2 dt, so only x and
// \int v^2 need contour quadrature; v itself follows from the primitive of
// the drive.

#include "bsv/drive.hpp"
#include "bsv/quantum_field.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

namespace bsv
{

struct BarrierSpec
{
  double delta_u = 5.0 / units::hartree_ev;
  double mass = 1.0;
  double charge = 1.0;
  double gap_length = 3.0 / units::bohr_nm;

  void validate() const;
  bool operator==(const BarrierSpec&) const = default;

  /// |xdot(t0)| = sqrt(2 delta_u / m)
  double launch_speed() const;
};

struct ContourSpec
{
  enum class Shape { vertical_then_real, straight_line };

  Shape shape = Shape::vertical_then_real;
  double max_step = 20.0;
  double branch_guard_radius = 1e-13;
  double rel_tol = 1e-13;

  void validate() const;
  bool operator==(const ContourSpec&) const = default;
};

struct ExitSample
{
  double t;
  double x;
  double v;
};

struct TunnelSolution
{
  ComplexScalar t0;
  double im_action = 0.0;
  double probability = 0.0;
  double tau0 = 0.0;
  bool converged = false;
  double residual_norm = 0.0;
  int iterations = 0;
  std::vector<ExitSample> exit_samples;
};

/// State of the complex trajectory at the end of the contour.
struct ContourState
{
  ComplexScalar x;
  ComplexScalar v;
  ComplexScalar lagrangian_integral; // \int_{t0}^{t_end} L dt
};

/// Admissible range of Re t0. Bounds are exclusive.
struct ExitWindow
{
  double re_min;
  double re_max;
};

struct SaddleGuess
{
  ComplexScalar t0;
  std::optional<ExitWindow> window;
};

struct NewtonOptions
{
  double tol = 1e-10;
  int max_iterations = 50;
  int max_halvings = 8;
  double fd_rel_step = 1e-6;
  // A step may cover at most this fraction of the distance to the window edge.
  double boundary_fraction = 0.9;
};

/// Integrates the trajectory from t0 to the real time t_end (Re t0 when
/// omitted) along the contour shape.
ContourState complex_trajectory(const Drive& drive, const BarrierSpec& b, ComplexScalar t0,
                                const ContourSpec& contour,
                                std::optional<double> t_end = std::nullopt);

ContourState complex_trajectory(const FieldRealization& fr, const BarrierSpec& b,
                                ComplexScalar t0, const ContourSpec& contour);

/// (Im x, Im xdot) at tau0 = Re t0.
std::array<double, 2> exit_residual(const Drive& drive, const BarrierSpec& b, ComplexScalar t0,
                                    const ContourSpec& contour);

std::array<double, 2> exit_residual(const FieldRealization& fr, const BarrierSpec& b,
                                    ComplexScalar t0, const ContourSpec& contour);

/// Imaginary tunneling time asinh(gamma) / omega for a field of magnitude
/// field_abs oscillating at omega; omega = 0 gives the static limit
/// sqrt(2 m delta_u) / (charge field_abs).
double keldysh_time(double field_abs, double omega, const BarrierSpec& b);

/// Start guess just after the first field edge following t_i at which the
/// field pushes toward the surface, plus the window (edge, node) in which
/// the exit time must lie. Throws NoValidWindow if no such edge exists
/// (x_i >= 0, r = 0, or a degenerate x_i).
SaddleGuess initial_guess(const FieldRealization& fr, const BarrierSpec& b,
                          const ContourSpec& contour = {});

/// Damped Newton iteration on (Re t0, Im t0) with a finite-difference
/// Jacobian. Returns the solution with converged = false instead of
/// throwing; solve_saddle wraps this and throws.
TunnelSolution try_solve_saddle(const Drive& drive, const BarrierSpec& b,
                                const ContourSpec& contour, const SaddleGuess& guess,
                                const NewtonOptions& opts = {});

/// Throws NotConverged or SignViolation.
TunnelSolution solve_saddle(const Drive& drive, const BarrierSpec& b, const ContourSpec& contour,
                            const SaddleGuess& guess, const NewtonOptions& opts = {});

TunnelSolution solve_saddle(const FieldRealization& fr, const BarrierSpec& b,
                            const ContourSpec& contour,
                            std::optional<SaddleGuess> guess = std::nullopt,
                            const NewtonOptions& opts = {});

/// Im S_opt for a converged solution; throws NegativeImAction.
double im_action(const Drive& drive, const BarrierSpec& b, const TunnelSolution& sol,
                 const ContourSpec& contour);

double im_action(const FieldRealization& fr, const BarrierSpec& b, const TunnelSolution& sol,
                 const ContourSpec& contour);

/// Solves the saddle and fills im_action and probability.
TunnelSolution solve_tunneling(const FieldRealization& fr, const BarrierSpec& b,
                               const ContourSpec& contour = {},
                               std::optional<SaddleGuess> guess = std::nullopt,
                               const NewtonOptions& opts = {});

/// exp(-2 Im S_opt) for the realization starting at x_i. Returns 0 when the
/// mode is unsqueezed (r = 0, no field at all); throws NoValidWindow for
/// x_i >= 0.
double tunnel_probability(double x_i, const SqueezingParams& p, double t_i, const BarrierSpec& b);

/// Real Newtonian motion after the exit, sampled uniformly in t from tau0 up
/// to the earlier of t_max and the time the electron reaches gap_length.
std::vector<ExitSample> exit_trajectory(const Drive& drive, const BarrierSpec& b,
                                        const TunnelSolution& sol, double t_max,
                                        std::size_t n_samples, const ContourSpec& contour = {});

std::vector<ExitSample> exit_trajectory(const FieldRealization& fr, const BarrierSpec& b,
                                        const TunnelSolution& sol, double t_max,
                                        std::size_t n_samples, const ContourSpec& contour = {});

} // namespace bsv

#endif
