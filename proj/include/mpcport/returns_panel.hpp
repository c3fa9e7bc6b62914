#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

namespace mpcport {

/// Dated matrix of per-asset simple daily returns. The universal input of
/// every other module. Rows are strictly increasing in date, cells are plain
/// decimal returns (0.01 = 1%), and every |return| < 1.
struct ReturnsPanel {
  std::vector<std::string> dates;   ///< ISO-8601, strictly increasing
  std::vector<std::string> assets;  ///< column names, n >= 2
  Eigen::MatrixXd returns;          ///< T x n

  int periods() const { return static_cast<int>(returns.rows()); }
  int num_assets() const { return static_cast<int>(returns.cols()); }

  /// Index of a named asset column; throws ValidationError if absent.
  int asset_index(const std::string& name) const;

  /// Panel restricted to rows [first, first+count).
  ReturnsPanel window(int first, int count) const;

  /// Panel with one column removed (used to split off a risk-free column).
  ReturnsPanel without_column(int col) const;

  /// Throws ValidationError if any invariant is violated.
  void validate() const;
};

struct CsvOptions {
  char delimiter = ',';
};

/// Loads a returns CSV: header row `date,<asset>,<asset>,...`, ISO dates in
/// the first column, plain decimal returns elsewhere. Rows are returned
/// sorted ascending by date. Malformed cells raise ParseError with the
/// offending 1-based row/column; duplicate dates or a panel narrower than
/// two assets raise ValidationError.
ReturnsPanel load_returns(const std::filesystem::path& path, const CsvOptions& options = {});

/// Writes the exact CSV layout load_returns reads (round-trips bit-exactly
/// through shortest-round-trip double formatting).
void save_returns(const ReturnsPanel& panel, const std::filesystem::path& path);

}  // namespace mpcport
