#ifndef BSV_CSV_IO_HPP
#define BSV_CSV_IO_HPP

// CSV output with a config-hash header line, plus the number formatting
// shared with the config emitter.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bsv
{

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

/// Whole-string parse; nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view s);

std::string sha256_hex(std::string_view data);

/// Buffers rows and writes the file in one go:
///   # config_hash: <hex>
///   col1,col2,...
///   rows
class CsvWriter
{
public:
  CsvWriter(std::string config_hash, std::vector<std::string> columns);

  CsvWriter& cell(double v);
  CsvWriter& cell(long long v);
  CsvWriter& cell(std::size_t v) { return cell(static_cast<long long>(v)); }
  CsvWriter& cell(int v) { return cell(static_cast<long long>(v)); }
  CsvWriter& cell(bool v) { return cell(static_cast<long long>(v ? 1 : 0)); }
  void end_row();

  std::string str() const;
  void write(const std::filesystem::path& path) const;

private:
  std::string hash_;
  std::vector<std::string> columns_;
  std::string body_;
  std::size_t in_row_ = 0;
};

/// Hash recorded in the first line of a CSV written by CsvWriter; throws
/// ParseError if the line is missing.
std::string read_csv_hash(const std::filesystem::path& path);

/// Throws ConfigHashMismatch when the file was written under another config.
void verify_csv_hash(const std::filesystem::path& path, const std::string& expected);

} // namespace bsv

#endif
