#pragma once

#include <optional>
#include <string>
#include <vector>

namespace distpd_cli {

/// Numeric table with named columns; NaN marks a missing value.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  // Optional trailing text column (one entry per row) for CSV output.
  std::string text_column;
  std::vector<std::string> text;

  // Throws ConfigError for an unknown column.
  std::size_t column(const std::string& name) const;
  std::string csv() const;
};

struct PlotSpec {
  std::string x, y;
  std::vector<std::string> group_by;  // one polyline per distinct tuple
  std::string title, x_label, y_label;
  std::optional<double> threshold;    // horizontal line
  bool markers = true;                // one circle per point
  int width = 800, height = 500;
};

// Deterministic SVG: fixed canvas, grouping in first-appearance order,
// fixed-precision coordinates.
std::string emit_svg(const Table& table, const PlotSpec& spec);

}  // namespace distpd_cli
