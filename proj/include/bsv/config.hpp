#ifndef BSV_CONFIG_HPP
#define BSV_CONFIG_HPP

// Run configuration: a flat INI file (top-level keys plus one level of
// sections). See README.md for the key table and defaults.

#include "bsv/ensemble.hpp"
#include "bsv/quantum_field.hpp"
#include "bsv/tunneling_solver.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bsv
{

enum class Mode { trajectories, field_phase_space, tunnel_scan, ptot_scan, exit_trajectories };

std::string to_string(Mode m);
Mode mode_from_string(const std::string& s); // throws ValidationError

struct RunConfig
{
  Mode mode = Mode::trajectories;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  std::size_t workers = 0; // 0: hardware concurrency

  double t_i = 0.0;
  double t_span = 3.0 * 2.0 * 3.141592653589793 / 0.0285; // three periods at the default omega
  std::size_t n_time_samples = 601;

  SqueezingParams squeezing;
  BarrierSpec barrier;
  QuadratureSpec quadrature;
  ContourSpec contour;

  // trajectories
  std::size_t n_realizations = 20;
  std::size_t n_x_grid = 201;
  double x_grid_sigmas = 4.0; // in units of the largest sigma over the period

  // field_phase_space
  double x_i = -2.32;

  // tunnel_scan
  std::size_t n_points = 400;

  // ptot_scan
  std::vector<double> r_list = {11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23, 24, 25};

  // exit_trajectories
  std::size_t n_levels = 20;
  std::size_t n_exit_samples = 200;
  double exit_t_span = 2.0 * 3.141592653589793 / 0.0285;

  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

/// Parses INI text. Throws ParseError (syntax, unknown key, malformed
/// value) or ValidationError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Effective config as INI text; parse_config(emit_config(c)) == c.
std::string emit_config(const RunConfig& c);

/// SHA-256 (hex) of the config with the run-only keys (output_dir, workers)
/// cleared, so the hash and the CSV bytes do not depend on them.
std::string config_hash(const RunConfig& c);

/// BSV_TUNNEL_OUT and BSV_TUNNEL_WORKERS, when set.
void apply_environment(RunConfig& c);

std::size_t effective_workers(const RunConfig& c);

} // namespace bsv

#endif
