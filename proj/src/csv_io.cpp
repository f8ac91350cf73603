#include "bsv/csv_io.hpp"

#include "bsv/errors.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

namespace bsv
{

std::string format_double(double v)
{
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::optional<double> parse_double(std::string_view s)
{
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+')
    ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    return std::nullopt;
  return v;
}

std::string sha256_hex(std::string_view data)
{
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xF]);
  }
  return out;
}

CsvWriter::CsvWriter(std::string config_hash, std::vector<std::string> columns)
    : hash_(std::move(config_hash)), columns_(std::move(columns))
{}

CsvWriter& CsvWriter::cell(double v)
{
  if (in_row_++)
    body_.push_back(',');
  body_ += format_double(v);
  return *this;
}

CsvWriter& CsvWriter::cell(long long v)
{
  if (in_row_++)
    body_.push_back(',');
  body_ += std::to_string(v);
  return *this;
}

void CsvWriter::end_row()
{
  if (in_row_ != columns_.size())
    throw Error("CSV row has " + std::to_string(in_row_) + " cells, expected "
                + std::to_string(columns_.size()));
  body_.push_back('\n');
  in_row_ = 0;
}

std::string CsvWriter::str() const
{
  std::string out = "# config_hash: " + hash_ + "\n";
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (i)
      out.push_back(',');
    out += columns_[i];
  }
  out.push_back('\n');
  return out + body_;
}

void CsvWriter::write(const std::filesystem::path& path) const
{
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f)
    throw Error("cannot open " + path.string() + " for writing");
  const std::string s = str();
  f.write(s.data(), static_cast<std::streamsize>(s.size()));
  if (!f)
    throw Error("write failed: " + path.string());
}

std::string read_csv_hash(const std::filesystem::path& path)
{
  std::ifstream f(path);
  if (!f)
    throw Error("cannot open " + path.string());
  std::string line;
  std::getline(f, line);
  constexpr std::string_view prefix = "# config_hash: ";
  if (line.rfind(prefix, 0) != 0)
    throw ParseError(path.string() + ": missing config_hash header", 1);
  return line.substr(prefix.size());
}

void verify_csv_hash(const std::filesystem::path& path, const std::string& expected)
{
  const std::string got = read_csv_hash(path);
  if (got != expected)
    throw ConfigHashMismatch(path.string() + " was written with config " + got + ", expected "
                             + expected);
}

} // namespace bsv
