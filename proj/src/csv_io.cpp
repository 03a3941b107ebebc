#include "krrlab/csv_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "krrlab/format.hpp"

namespace krrlab {

namespace {

constexpr std::string_view kQuantileHeader = "noise,alpha,level,quantile";
constexpr std::string_view kRawHeader = "noise,alpha,trial,risk";
constexpr std::string_view kFnSumHeader = "noise,n,level,quantile";

template <typename Rows>
void export_rows(const Rows& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string() + ": unable to open for writing");
  write_csv(out, rows);
  out.flush();
  if (!out) throw std::runtime_error("cannot write " + path.string() + ": write failed");
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::uint64_t parse_u64(std::string_view token) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size())
    throw std::invalid_argument("not an unsigned integer: '" + std::string(token) + "'");
  return v;
}

// Calls row(fields) for every data line after checking the header.
template <typename RowFn>
void read_rows(const std::filesystem::path& path, std::string_view header, RowFn row) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string() + ": unable to open");
  std::string line;
  if (!std::getline(in, line) || line != header)
    throw std::runtime_error("cannot read " + path.string() + ": expected header '" + std::string(header) + "'");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 4)
      throw std::runtime_error("cannot read " + path.string() + ": line " + std::to_string(line_no) +
                               " does not have 4 fields");
    try {
      row(fields);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("cannot read " + path.string() + ": line " + std::to_string(line_no) + ": " +
                               e.what());
    }
  }
}

}  // namespace

void write_csv(std::ostream& out, const QuantileTable& table) {
  out << kQuantileHeader << '\n';
  for (const auto& r : table)
    out << r.noise << ',' << to_shortest(r.alpha) << ',' << to_shortest(r.level) << ',' << to_shortest(r.quantile)
        << '\n';
}

void write_csv(std::ostream& out, const RawRiskLog& log) {
  out << kRawHeader << '\n';
  for (const auto& r : log)
    out << r.noise << ',' << to_shortest(r.alpha) << ',' << r.trial << ',' << to_shortest(r.risk) << '\n';
}

void write_csv(std::ostream& out, const std::vector<FnSumRow>& rows) {
  out << kFnSumHeader << '\n';
  for (const auto& r : rows)
    out << r.noise << ',' << r.n << ',' << to_shortest(r.level) << ',' << to_shortest(r.quantile) << '\n';
}

void export_csv(const QuantileTable& table, const std::filesystem::path& path) { export_rows(table, path); }
void export_csv(const RawRiskLog& log, const std::filesystem::path& path) { export_rows(log, path); }
void export_csv(const std::vector<FnSumRow>& rows, const std::filesystem::path& path) { export_rows(rows, path); }

QuantileTable read_quantile_csv(const std::filesystem::path& path) {
  QuantileTable table;
  read_rows(path, kQuantileHeader, [&](const std::vector<std::string_view>& f) {
    table.push_back({std::string(f[0]), parse_double(f[1]), parse_double(f[2]), parse_double(f[3])});
  });
  return table;
}

RawRiskLog read_raw_csv(const std::filesystem::path& path) {
  RawRiskLog log;
  read_rows(path, kRawHeader, [&](const std::vector<std::string_view>& f) {
    log.push_back({std::string(f[0]), parse_double(f[1]), parse_u64(f[2]), parse_double(f[3])});
  });
  return log;
}

}  // namespace krrlab
