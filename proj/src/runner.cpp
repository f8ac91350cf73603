#include "bsv/runner.hpp"

#include "bsv/csv_io.hpp"
#include "bsv/ensemble.hpp"
#include "bsv/errors.hpp"

#include "json.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>

#ifndef BSV_VERSION
#define BSV_VERSION "unknown"
#endif

namespace bsv
{

namespace
{

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr double nan = std::numeric_limits<double>::quiet_NaN();
constexpr double failure_threshold = 0.01;

// Numerical failure detected after the files were produced.
class ThresholdExceeded : public Error { public: using Error::Error; };

struct ModeOutput
{
  std::vector<std::pair<std::string, CsvWriter>> csvs;
  json extra = json::object();
  std::string failure; // non-empty: files are written, run exits nonzero
};

std::vector<double> time_grid(const RunConfig& c)
{
  std::vector<double> t(c.n_time_samples);
  for (std::size_t k = 0; k < t.size(); ++k)
    t[k] = c.t_i + c.t_span * static_cast<double>(k) / static_cast<double>(t.size() - 1);
  return t;
}

ModeOutput run_trajectories(const RunConfig& c, const std::string& hash)
{
  const auto& p = c.squeezing;
  const auto ts = time_grid(c);
  const auto xs = sample_initial(p, c.t_i, c.n_realizations, c.seed, false);

  CsvWriter traj(hash, {"t", "realization_id", "X", "P", "E"});
  for (std::size_t id = 0; id < xs.size(); ++id) {
    const FieldRealization fr{p, xs[id], c.t_i};
    for (double t : ts)
      traj.cell(t).cell(id).cell(x_trajectory(fr, t)).cell(p_trajectory(fr, t)).cell(e_field(fr, t)).end_row();
  }

  // Largest sigma over a period is exp(r) / sqrt(2).
  const double x_max = c.x_grid_sigmas * std::exp(p.r) / std::sqrt(2.0);
  CsvWriter grid(hash, {"t", "X", "rho"});
  for (double t : ts)
    for (std::size_t j = 0; j < c.n_x_grid; ++j) {
      const double x = -x_max + 2.0 * x_max * static_cast<double>(j) / static_cast<double>(c.n_x_grid - 1);
      grid.cell(t).cell(x).cell(rho(x, t, p)).end_row();
    }

  ModeOutput out;
  out.csvs.emplace_back("trajectories.csv", std::move(traj));
  out.csvs.emplace_back("rho_grid.csv", std::move(grid));
  out.extra["initial_x"] = xs;
  return out;
}

ModeOutput run_phase_space(const RunConfig& c, const std::string& hash)
{
  const FieldRealization fr{c.squeezing, c.x_i, c.t_i};
  CsvWriter csv(hash, {"t", "X", "P"});
  for (double t : time_grid(c))
    csv.cell(t).cell(x_trajectory(fr, t)).cell(p_trajectory(fr, t)).end_row();
  ModeOutput out;
  out.csvs.emplace_back("phase_space.csv", std::move(csv));
  return out;
}

ModeOutput run_tunnel_scan(const RunConfig& c, const std::string& hash)
{
  const auto rows = tunnel_scan(c.squeezing, c.t_i, c.barrier, c.n_points,
                                c.quadrature.x_min_sigmas, c.contour);
  CsvWriter csv(hash, {"X_i", "rho", "P", "rho_P", "re_t0", "im_t0", "im_S", "converged"});
  std::size_t failed = 0;
  for (const auto& r : rows) {
    failed += r.converged ? 0 : 1;
    csv.cell(r.x_i).cell(r.rho).cell(r.probability).cell(r.rho_p);
    if (r.converged)
      csv.cell(r.t0.real()).cell(r.t0.imag()).cell(r.im_s);
    else
      csv.cell(nan).cell(nan).cell(nan);
    csv.cell(r.converged).end_row();
  }
  ModeOutput out;
  out.csvs.emplace_back("tunnel_scan.csv", std::move(csv));
  out.extra["sigma"] = sigma(c.t_i, c.squeezing);
  out.extra["n_failed_nodes"] = failed;
  if (static_cast<double>(failed) > failure_threshold * static_cast<double>(rows.size()))
    out.failure = std::to_string(failed) + " of " + std::to_string(rows.size())
                  + " realizations did not converge";
  return out;
}

ModeOutput run_ptot_scan(const RunConfig& c, const std::string& hash)
{
  const ScanResult res = scan_r(c.r_list, c.squeezing, c.t_i, c.barrier, c.quadrature, c.contour,
                                effective_workers(c));
  CsvWriter csv(hash, {"r", "sigma", "X_peak", "E_peak", "gamma_peak", "P_tot", "n_failed_nodes"});
  json rows = json::array();
  ModeOutput out;
  std::string& failure = out.failure;
  for (const auto& r : res.rows) {
    csv.cell(r.r).cell(r.sigma);
    if (r.ok)
      csv.cell(r.x_peak).cell(r.e_peak).cell(r.gamma_peak).cell(r.p_tot);
    else
      csv.cell(nan).cell(nan).cell(nan).cell(nan);
    csv.cell(r.n_failed_nodes).end_row();

    json row = {{"r", r.r},
                {"ok", r.ok},
                {"n_nodes", r.n_nodes},
                {"n_failed_nodes", r.n_failed_nodes},
                {"tail_bound", r.tail_bound}};
    if (std::isfinite(r.error_estimate))
      row["quadrature_error"] = r.error_estimate;
    if (!r.ok)
      row["error"] = r.error;
    rows.push_back(row);
    if (failure.empty()) {
      if (!r.ok)
        failure = "r = " + format_double(r.r) + ": " + r.error;
      else if (static_cast<double>(r.n_failed_nodes)
               > failure_threshold * static_cast<double>(r.n_nodes))
        failure = "r = " + format_double(r.r) + ": " + std::to_string(r.n_failed_nodes) + " of "
                  + std::to_string(r.n_nodes) + " quadrature nodes failed";
    }
  }
  out.csvs.emplace_back("ptot_scan.csv", std::move(csv));
  out.extra["rows"] = rows;
  return out;
}

ModeOutput run_exit_trajectories(const RunConfig& c, const std::string& hash)
{
  const auto& p = c.squeezing;
  TunnelingModel model(p, c.t_i, c.barrier, c.contour);
  const ProbabilityFn fn = model.as_function();
  const XPeak peak = find_x_peak(p, c.t_i, fn, c.quadrature.x_min_sigmas);
  std::vector<double> fractions;
  for (std::size_t l = 0; l < c.n_levels; ++l)
    fractions.push_back(1.0 - static_cast<double>(l) / 20.0);
  const auto levels = x_levels(p, c.t_i, fn, peak, fractions, c.quadrature.x_min_sigmas);

  CsvWriter csv(hash, {"level_l", "t", "x", "v"});
  json info = json::array();
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const FieldRealization fr{p, levels[l], c.t_i};
    const TunnelSolution sol = solve_tunneling(fr, c.barrier, c.contour);
    const auto samples =
      exit_trajectory(fr, c.barrier, sol, sol.tau0 + c.exit_t_span, c.n_exit_samples, c.contour);
    bool monotone = true;
    for (std::size_t k = 1; k < samples.size(); ++k)
      monotone = monotone && samples[k].x > samples[k - 1].x;
    for (const auto& s : samples)
      csv.cell(l).cell(s.t).cell(s.x).cell(s.v).end_row();
    info.push_back({{"level_l", l},
                    {"fraction", fractions[l]},
                    {"X_l", levels[l]},
                    {"re_t0", sol.t0.real()},
                    {"im_t0", sol.t0.imag()},
                    {"im_S", sol.im_action},
                    {"monotone", monotone}});
  }
  ModeOutput out;
  out.csvs.emplace_back("exit_traj.csv", std::move(csv));
  out.extra["X_peak"] = peak.x_peak;
  out.extra["levels"] = info;
  return out;
}

std::string utc_now()
{
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json config_json(const RunConfig& c)
{
  // Mirror the INI layout: top-level keys plus one object per section.
  json j = json::object();
  std::istringstream in(emit_config(c));
  std::string line, section;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    if (line.front() == '[') {
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find(" = ");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 3);
    if (section.empty())
      j[key] = value;
    else
      j[section][key] = value;
  }
  return j;
}

void write_json(const fs::path& path, const json& j)
{
  std::ofstream f(path, std::ios::trunc);
  f << j.dump(2) << "\n";
}

} // namespace

std::string csv_name(Mode m)
{
  switch (m) {
  case Mode::trajectories: return "trajectories.csv";
  case Mode::field_phase_space: return "phase_space.csv";
  case Mode::tunnel_scan: return "tunnel_scan.csv";
  case Mode::ptot_scan: return "ptot_scan.csv";
  case Mode::exit_trajectories: return "exit_traj.csv";
  }
  return "out.csv";
}

std::string error_kind(const std::exception& e)
{
#define BSV_KIND(T)                                                                                \
  if (dynamic_cast<const T*>(&e))                                                                  \
    return #T;
  BSV_KIND(BranchAmbiguity)
  BSV_KIND(NonConvergedQuadrature)
  BSV_KIND(NoValidWindow)
  BSV_KIND(NotConverged)
  BSV_KIND(SignViolation)
  BSV_KIND(NegativeImAction)
  BSV_KIND(QuadratureNotConverged)
  BSV_KIND(NoInteriorMax)
  BSV_KIND(RootNotBracketed)
  BSV_KIND(DivisionByZeroField)
  BSV_KIND(ParseError)
  BSV_KIND(ValidationError)
  BSV_KIND(ConfigHashMismatch)
  BSV_KIND(ThresholdExceeded)
  BSV_KIND(Error)
#undef BSV_KIND
  return "std::exception";
}

std::string report_json(const RunReport& r)
{
  json j = {{"status", r.status}, {"exit_code", r.exit_code}};
  if (!r.error_kind.empty())
    j["error_kind"] = r.error_kind;
  if (!r.message.empty())
    j["message"] = r.message;
  json files = json::array();
  for (const auto& f : r.files)
    files.push_back(f.string());
  j["files"] = files;
  return j.dump();
}

RunReport run(const RunConfig& config)
{
  RunReport report;
  auto fail = [&](int code, const std::string& status, const std::exception& e) {
    report.exit_code = code;
    report.status = status;
    report.error_kind = error_kind(e);
    report.message = e.what();
  };

  try {
    config.validate();
  } catch (const std::exception& e) {
    fail(exit_code::config_error, "config_error", e);
    return report;
  }

  const fs::path dir = config.output_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    fail(exit_code::config_error, "config_error",
         ValidationError("output_dir writable: " + dir.string()));
    return report;
  }

  const std::string hash = config_hash(config);
  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();

  ModeOutput out;
  try {
    switch (config.mode) {
    case Mode::trajectories: out = run_trajectories(config, hash); break;
    case Mode::field_phase_space: out = run_phase_space(config, hash); break;
    case Mode::tunnel_scan: out = run_tunnel_scan(config, hash); break;
    case Mode::ptot_scan: out = run_ptot_scan(config, hash); break;
    case Mode::exit_trajectories: out = run_exit_trajectories(config, hash); break;
    }
    if (!out.failure.empty())
      fail(exit_code::numerical_failure, "numerical_failure", ThresholdExceeded(out.failure));
  } catch (const ValidationError& e) {
    fail(exit_code::config_error, "config_error", e);
  } catch (const std::exception& e) {
    fail(exit_code::numerical_failure, "numerical_failure", e);
  }

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  try {
    for (const auto& [name, csv] : out.csvs) {
      csv.write(dir / name);
      report.files.push_back(dir / name);
    }
    json meta = {{"mode", to_string(config.mode)},
                 {"config_hash", hash},
                 {"config", config_json(config)},
                 {"code_version", BSV_VERSION},
                 {"started_utc", started},
                 {"wall_time_s", wall},
                 {"workers", effective_workers(config)},
                 {"status", report.status}};
    if (!report.message.empty())
      meta["error"] = {{"kind", report.error_kind}, {"message", report.message}};
    if (config.mode == Mode::ptot_scan || config.mode == Mode::tunnel_scan)
      meta["integration_domain"] = {{"x_min_sigmas", config.quadrature.x_min_sigmas},
                                    {"gaussian_tail_bound",
                                     0.5 * std::erfc(config.quadrature.x_min_sigmas / std::sqrt(2.0))}};
    meta["result"] = out.extra;
    const fs::path meta_path = dir / (to_string(config.mode) + ".meta.json");
    write_json(meta_path, meta);
    report.files.push_back(meta_path);
    if (report.exit_code != exit_code::success)
      write_json(dir / "error.json", json::parse(report_json(report)));
  } catch (const std::exception& e) {
    if (report.exit_code == exit_code::success)
      fail(exit_code::config_error, "config_error", e);
  }
  return report;
}

} // namespace bsv
