#ifndef BSV_ENSEMBLE_HPP
#define BSV_ENSEMBLE_HPP

// Averaging the per-realization tunneling probability over the initial
// quadrature distribution, locating the dominant realization, and scans
// over the squeezing factor.
//
// Integrals and searches run in the scaled variable s = X_i / sigma(t_i),
// on the half-line restricted to s in [-x_min_sigmas, 0).

#include "bsv/quantum_field.hpp"
#include "bsv/tunneling_solver.hpp"

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace bsv
{

struct QuadratureSpec
{
  enum class Method { adaptive, fixed_gauss };

  Method method = Method::adaptive;
  double x_min_sigmas = 8.0;
  std::size_t n_nodes = 64;
  double rel_tol = 1e-8;

  void validate() const;
  bool operator==(const QuadratureSpec&) const = default;
};

/// P(X_i) for X_i < 0.
using ProbabilityFn = std::function<double(double)>;

/// Solves realizations one at a time, warm-starting each saddle from the
/// nearest previously solved node. Not thread-safe; one instance per worker.
class TunnelingModel
{
public:
  TunnelingModel(SqueezingParams p, double t_i, BarrierSpec b, ContourSpec contour = {},
                 NewtonOptions newton = {});

  /// Never throws on numerical failure; check converged.
  TunnelSolution solve(double x_i);

  /// Failed nodes count as probability 0 and are tallied in n_failed().
  double probability(double x_i);

  ProbabilityFn as_function();

  std::size_t n_evaluations() const { return n_evaluations_; }
  std::size_t n_failed() const { return n_failed_; }
  const SqueezingParams& params() const { return params_; }
  double t_i() const { return t_i_; }
  const BarrierSpec& barrier() const { return barrier_; }

private:
  SqueezingParams params_;
  double t_i_;
  BarrierSpec barrier_;
  ContourSpec contour_;
  NewtonOptions newton_;
  std::map<double, ComplexScalar> solved_; // s -> t0
  std::size_t n_evaluations_ = 0;
  std::size_t n_failed_ = 0;
};

struct PTotal
{
  double value = 0.0;
  double error_estimate = 0.0; // NaN for fixed_gauss
  double tail_bound = 0.0;     // Gaussian mass beyond x_min_sigmas (P <= 1)
  std::size_t n_evaluations = 0;
  std::size_t n_failed = 0;
};

PTotal p_total(const SqueezingParams& p, double t_i, const ProbabilityFn& prob,
               const QuadratureSpec& q);
PTotal p_total(TunnelingModel& model, const QuadratureSpec& q);
double p_total(const SqueezingParams& p, double t_i, const BarrierSpec& b, const QuadratureSpec& q);

struct XPeak
{
  double x_peak;
  double g_peak; // rho(X_peak) P(X_peak)
};

/// Maximizes rho(X) P(X) on [-x_min_sigmas sigma, 0): log-spaced grid
/// search, then golden-section refinement on log g to tol_sigmas * sigma.
/// Throws NoInteriorMax when the grid maximum sits at either end.
XPeak find_x_peak(const SqueezingParams& p, double t_i, const ProbabilityFn& prob,
                  double x_min_sigmas = 8.0, double tol_sigmas = 1e-8);
XPeak find_x_peak(const SqueezingParams& p, double t_i, const BarrierSpec& b);

/// For each fraction f in (0, 1], the root of rho P = f g_peak on the
/// large-|X| side of the peak. Throws RootNotBracketed.
std::vector<double> x_levels(const SqueezingParams& p, double t_i, const ProbabilityFn& prob,
                             const XPeak& peak, const std::vector<double>& fractions,
                             double x_min_sigmas = 8.0);
std::vector<double> x_levels(const SqueezingParams& p, double t_i, const BarrierSpec& b,
                             const std::vector<double>& fractions);

/// max |field_scale P(t)| over one period pi/omega of the realization.
double e_peak(const SqueezingParams& p, double t_i, double x_peak);

/// omega sqrt(2 m delta_u) / (charge e_peak); throws DivisionByZeroField.
double gamma_peak(double e_peak, const BarrierSpec& b, double omega);

struct ScanRow
{
  double r = 0.0;
  double sigma = 0.0;
  double x_peak = 0.0;
  double e_peak = 0.0;
  double gamma_peak = 0.0;
  double p_tot = 0.0;
  std::size_t n_failed_nodes = 0;
  std::size_t n_nodes = 0;
  double tail_bound = 0.0;
  double error_estimate = 0.0;
  bool ok = true;
  std::string error;
};

struct ScanResult
{
  SqueezingParams params; // template; r varies per row
  double t_i = 0.0;
  BarrierSpec barrier;
  QuadratureSpec quadrature;
  std::vector<ScanRow> rows; // sorted by r
};

/// Rows are computed independently (possibly on several threads) and
/// collected by index, so the output does not depend on `workers`.
/// Per-row failures are recorded in the row, not thrown.
ScanResult scan_r(std::vector<double> r_list, const SqueezingParams& p_template, double t_i,
                  const BarrierSpec& b, const QuadratureSpec& q, const ContourSpec& contour = {},
                  std::size_t workers = 1);

ScanRow scan_row(double r, const SqueezingParams& p_template, double t_i, const BarrierSpec& b,
                 const QuadratureSpec& q, const ContourSpec& contour = {});

struct TunnelScanRow
{
  double x_i;
  double rho;
  double probability;
  double rho_p;
  ComplexScalar t0;
  double im_s;
  bool converged;
};

/// Per-realization scan on the uniform grid X_i = -x_min_sigmas sigma (1 - k/n),
/// k = 0..n-1.
std::vector<TunnelScanRow> tunnel_scan(const SqueezingParams& p, double t_i, const BarrierSpec& b,
                                       std::size_t n_points, double x_min_sigmas = 8.0,
                                       const ContourSpec& contour = {});

/// Runs body(i) for i in [0, n) on up to `workers` threads.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& body);

} // namespace bsv

#endif
