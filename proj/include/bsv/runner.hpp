#ifndef BSV_RUNNER_HPP
#define BSV_RUNNER_HPP

#include "bsv/config.hpp"

#include <exception>
#include <filesystem>
#include <string>
#include <vector>

namespace bsv
{

namespace exit_code
{
inline constexpr int success = 0;
inline constexpr int config_error = 2;
inline constexpr int numerical_failure = 3;
} // namespace exit_code

struct RunReport
{
  int exit_code = exit_code::success;
  std::string status = "ok"; // ok | config_error | numerical_failure
  std::string error_kind;
  std::string message;
  std::vector<std::filesystem::path> files; // CSVs and the metadata sidecar
};

/// CSV file name written by each mode.
std::string csv_name(Mode m);

/// Runs config.mode and writes its CSV(s) plus <mode>.meta.json into
/// config.output_dir. Errors are reported through the returned status, not
/// thrown; on failure error.json is written as well when the directory is
/// usable.
RunReport run(const RunConfig& config);

/// Class name of a library error, "std::exception" otherwise.
std::string error_kind(const std::exception& e);

/// One-line JSON for stderr.
std::string report_json(const RunReport& r);

} // namespace bsv

#endif
