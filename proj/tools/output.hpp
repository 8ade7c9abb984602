#pragma once

// Artifact writers: RFC-4180 CSV with 17 significant digits, fixed-layout
// SVG plots, and whole-file writes.

#include <filesystem>
#include <string>
#include <vector>

namespace tiltlab::cli {

/// Real formatted with 17 significant digits; empty for NaN.
std::string csv_real(double v);
/// Quotes the field when it holds a comma, quote or line break.
std::string csv_field(const std::string& text);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void add_row(std::vector<std::string> cells);
  std::size_t rows() const { return rows_.size(); }
  /// CRLF-terminated records, header first.
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Writes in binary mode; throws std::runtime_error on failure.
void write_file(const std::filesystem::path& path, const std::string& content);

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool dashed = false;
};

struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  std::vector<PlotSeries> series;
};

/// 640x400 plot with axes, ticks and a legend. Non-finite points, and
/// non-positive ones on a log axis, are skipped.
std::string svg_line_plot(const LinePlot& plot);

std::string svg_histogram(const std::vector<double>& values, std::size_t bins,
                          const std::string& title, const std::string& x_label);

}  // namespace tiltlab::cli
