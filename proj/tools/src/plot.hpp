#pragma once

#include <string>
#include <vector>

namespace modgrok::cli {

/// A parsed CSV: optional header plus rows of raw fields. Line numbers are 1-based.
struct CsvTable {
  std::string source;
  std::vector<std::string> header;  // empty for headerless numeric grids
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;

  /// Column as numbers; throws FormatError naming the line of the first bad field.
  std::vector<double> numeric(std::size_t column) const;
  std::size_t column(const std::string& name) const;
};

/// Throws FormatError for empty input, ragged rows, or empty fields.
CsvTable parse_csv(const std::string& text, const std::string& source);

enum class PlotKind { kMetrics, kSpectrum, kMagnitude, kRankSweep, kAblation, kFits };

/// Chooses the chart from the header; throws FormatError for unknown layouts.
PlotKind detect_kind(const CsvTable& table);

/// Renders a fixed-size SVG. Output depends only on the table and threshold.
std::string render_svg(const CsvTable& table, const std::string& title, double threshold);

}  // namespace modgrok::cli
