// bsv-tunnel <mode> --config <path> [--out <dir>] [--workers N] [--seed N]

#include "bsv/config.hpp"
#include "bsv/errors.hpp"
#include "bsv/runner.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <optional>

int main(int argc, char** argv)
{
  CLI::App app{"Tunneling driven by bright squeezed vacuum: field trajectories, "
               "per-realization tunneling and squeezing scans"};
  std::string mode;
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed;
  app.add_option("mode", mode, "trajectories | field_phase_space | tunnel_scan | ptot_scan | exit_trajectories")
    ->required()
    ->check(CLI::IsMember({"trajectories", "field_phase_space", "tunnel_scan", "ptot_scan",
                           "exit_trajectories"}));
  app.add_option("--config", config_path, "INI config file")->required();
  app.add_option("--out", out_dir, "output directory (overrides config and BSV_TUNNEL_OUT)");
  app.add_option("--workers", workers, "worker threads, 0 = all cores");
  app.add_option("--seed", seed, "sampling seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : bsv::exit_code::config_error;
  }

  bsv::RunConfig cfg;
  try {
    cfg = bsv::load_config(config_path);
    bsv::apply_environment(cfg);
    cfg.mode = bsv::mode_from_string(mode);
    if (out_dir)
      cfg.output_dir = *out_dir;
    if (workers)
      cfg.workers = *workers;
    if (seed)
      cfg.seed = *seed;
    cfg.validate();
  } catch (const std::exception& e) {
    bsv::RunReport r;
    r.exit_code = bsv::exit_code::config_error;
    r.status = "config_error";
    r.error_kind = bsv::error_kind(e);
    r.message = e.what();
    std::cerr << bsv::report_json(r) << "\n";
    return r.exit_code;
  }

  const bsv::RunReport report = bsv::run(cfg);
  (report.exit_code == 0 ? std::cout : std::cerr) << bsv::report_json(report) << "\n";
  return report.exit_code;
}
