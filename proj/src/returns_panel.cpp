#include "mpcport/returns_panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mpcport/dates.hpp"
#include "mpcport/errors.hpp"

namespace mpcport {

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) fields.push_back(field);
  if (!line.empty() && line.back() == delim) fields.emplace_back();
  return fields;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& raw, int row, int col) {
  const std::string s = trim(raw);
  if (s.empty())
    throw ParseError("blank cell at row " + std::to_string(row) + ", column " +
                         std::to_string(col),
                     row, col);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError("unparseable cell '" + s + "' at row " + std::to_string(row) +
                         ", column " + std::to_string(col),
                     row, col);
  return value;
}

}  // namespace

int ReturnsPanel::asset_index(const std::string& name) const {
  auto it = std::find(assets.begin(), assets.end(), name);
  if (it == assets.end()) throw ValidationError("no asset column named '" + name + "'");
  return static_cast<int>(it - assets.begin());
}

ReturnsPanel ReturnsPanel::window(int first, int count) const {
  if (first < 0 || count < 0 || first + count > periods())
    throw ValidationError("window [" + std::to_string(first) + ", +" +
                          std::to_string(count) + ") out of range for T=" +
                          std::to_string(periods()));
  ReturnsPanel out;
  out.assets = assets;
  out.dates.assign(dates.begin() + first, dates.begin() + first + count);
  out.returns = returns.middleRows(first, count);
  return out;
}

ReturnsPanel ReturnsPanel::without_column(int col) const {
  if (col < 0 || col >= num_assets()) throw ValidationError("column index out of range");
  ReturnsPanel out;
  out.dates = dates;
  for (int j = 0; j < num_assets(); ++j)
    if (j != col) out.assets.push_back(assets[j]);
  out.returns.resize(periods(), num_assets() - 1);
  for (int j = 0, k = 0; j < num_assets(); ++j)
    if (j != col) out.returns.col(k++) = returns.col(j);
  return out;
}

void ReturnsPanel::validate() const {
  const int T = periods();
  const int n = num_assets();
  if (n < 2) throw ValidationError("panel needs at least 2 assets, got " + std::to_string(n));
  if (static_cast<int>(assets.size()) != n)
    throw ValidationError("asset name count does not match column count");
  if (static_cast<int>(dates.size()) != T)
    throw ValidationError("date count does not match row count");
  std::int64_t prev = std::numeric_limits<std::int64_t>::min();
  for (int t = 0; t < T; ++t) {
    const std::int64_t d = dates::to_days(dates[t]);
    if (d == prev) throw ValidationError("duplicate date " + dates[t]);
    if (d < prev) throw ValidationError("dates not increasing at " + dates[t]);
    prev = d;
  }
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < n; ++j) {
      const double r = returns(t, j);
      if (!std::isfinite(r) || std::abs(r) >= 1.0)
        throw ValidationError("return out of range (|r| < 1 required) at " + dates[t] +
                              ", asset " + assets[j]);
    }
}

ReturnsPanel load_returns(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open returns file " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file " + path.string());
  auto header = split_line(line, options.delimiter);
  if (header.size() < 3)
    throw ValidationError("header needs a date column and at least 2 assets in " +
                          path.string());

  ReturnsPanel panel;
  for (std::size_t j = 1; j < header.size(); ++j) panel.assets.push_back(trim(header[j]));

  std::vector<std::pair<std::int64_t, int>> order;  // (day, raw row) for the sort
  std::vector<std::string> raw_dates;
  std::vector<Eigen::VectorXd> raw_rows;
  int row = 1;  // header was row 1
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto fields = split_line(line, options.delimiter);
    if (fields.size() != header.size())
      throw ParseError("row " + std::to_string(row) + " has " +
                           std::to_string(fields.size()) + " fields, expected " +
                           std::to_string(header.size()),
                       row, 0);
    const std::string date = trim(fields[0]);
    std::int64_t day;
    try {
      day = dates::to_days(date);
    } catch (const ParseError& e) {
      throw ParseError(std::string(e.what()) + " at row " + std::to_string(row), row, 1);
    }
    Eigen::VectorXd r(panel.assets.size());
    for (std::size_t j = 1; j < fields.size(); ++j)
      r[j - 1] = parse_cell(fields[j], row, static_cast<int>(j + 1));
    order.emplace_back(day, static_cast<int>(raw_rows.size()));
    raw_dates.push_back(date);
    raw_rows.push_back(std::move(r));
  }

  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  panel.returns.resize(raw_rows.size(), panel.assets.size());
  for (std::size_t t = 0; t < order.size(); ++t) {
    panel.dates.push_back(raw_dates[order[t].second]);
    panel.returns.row(t) = raw_rows[order[t].second];
  }
  panel.validate();
  return panel;
}

void save_returns(const ReturnsPanel& panel, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write returns file " + path.string());
  out << "date";
  for (const auto& a : panel.assets) out << ',' << a;
  out << '\n';
  char buf[64];
  for (int t = 0; t < panel.periods(); ++t) {
    out << panel.dates[t];
    for (int j = 0; j < panel.num_assets(); ++j) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), panel.returns(t, j));
      (void)ec;
      out << ',' << std::string_view(buf, ptr - buf);
    }
    out << '\n';
  }
}

}  // namespace mpcport
