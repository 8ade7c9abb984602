#include "output.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace tiltlab::cli {
namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 160.0;  // legend column
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

// Fixed two-decimal coordinates keep the files diffable.
std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const {
    const double w = kWidth - kLeft - kRight;
    return kLeft + (x1 > x0 ? (x - x0) / (x1 - x0) : 0.5) * w;
  }
  double py(double y) const {
    const double h = kHeight - kTop - kBottom;
    return kHeight - kBottom - (y1 > y0 ? (y - y0) / (y1 - y0) : 0.5) * h;
  }
};

void open_svg(std::ostringstream& o, const std::string& title) {
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\""
    << num(kHeight) << "\" viewBox=\"0 0 " << num(kWidth) << ' ' << num(kHeight) << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << num(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" "
    << "font-family=\"sans-serif\" font-size=\"15\">" << escape_xml(title) << "</text>\n";
}

void axes(std::ostringstream& o, const Frame& f, const std::string& xl, const std::string& yl,
          const std::vector<std::pair<double, std::string>>& xticks,
          const std::vector<std::pair<double, std::string>>& yticks) {
  const double bx = kHeight - kBottom;
  o << "<g stroke=\"black\" stroke-width=\"1\">\n"
    << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(bx) << "\" x2=\"" << num(kWidth - kRight)
    << "\" y2=\"" << num(bx) << "\"/>\n"
    << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(kLeft)
    << "\" y2=\"" << num(bx) << "\"/>\n";
  for (const auto& [v, _] : xticks) {
    o << "<line x1=\"" << num(f.px(v)) << "\" y1=\"" << num(bx) << "\" x2=\"" << num(f.px(v))
      << "\" y2=\"" << num(bx + 5) << "\"/>\n";
  }
  for (const auto& [v, _] : yticks) {
    o << "<line x1=\"" << num(kLeft - 5) << "\" y1=\"" << num(f.py(v)) << "\" x2=\""
      << num(kLeft) << "\" y2=\"" << num(f.py(v)) << "\"/>\n";
  }
  o << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (const auto& [v, label] : xticks) {
    o << "<text x=\"" << num(f.px(v)) << "\" y=\"" << num(bx + 18)
      << "\" text-anchor=\"middle\">" << escape_xml(label) << "</text>\n";
  }
  for (const auto& [v, label] : yticks) {
    o << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(f.py(v) + 4)
      << "\" text-anchor=\"end\">" << escape_xml(label) << "</text>\n";
  }
  o << "<text x=\"" << num((kLeft + kWidth - kRight) / 2) << "\" y=\"" << num(kHeight - 12)
    << "\" text-anchor=\"middle\">" << escape_xml(xl) << "</text>\n"
    << "<text x=\"16\" y=\"" << num((kTop + bx) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << num((kTop + bx) / 2) << ")\">" << escape_xml(yl) << "</text>\n</g>\n";
}

std::vector<std::pair<double, std::string>> linear_ticks(double lo, double hi) {
  std::vector<std::pair<double, std::string>> out;
  if (!(hi > lo)) {
    out.emplace_back(lo, tick_label(lo));
    return out;
  }
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) {
    out.emplace_back(v, tick_label(std::abs(v) < 1e-12 * step ? 0.0 : v));
  }
  return out;
}

}  // namespace

std::string csv_real(double v) {
  if (std::isnan(v)) return "";
  std::array<char, 48> buf{};
  const auto res =
      std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  return std::string(buf.data(), res.ptr);
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\r\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) {
    throw std::logic_error("CsvTable: row width does not match the header");
  }
  rows_.push_back(std::move(cells));
}

std::string CsvTable::str() const {
  std::string out;
  auto emit = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += csv_field(cells[i]);
    }
    out += "\r\n";
  };
  emit(header_);
  for (const auto& r : rows_) emit(r);
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

std::string svg_line_plot(const LinePlot& plot) {
  auto usable = [&plot](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!plot.log_y || y > 0.0);
  };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : plot.series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      const double y = plot.log_y ? std::log10(s.y[i]) : s.y[i];
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (!std::isfinite(x0)) {
    x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  }
  if (plot.log_y) {
    y0 = std::floor(y0);
    y1 = std::max(std::ceil(y1), y0 + 1.0);
  } else if (!(y1 > y0)) {
    y0 -= 0.5, y1 += 0.5;
  }
  const Frame f{x0, x1, y0, y1};

  std::vector<std::pair<double, std::string>> yticks;
  if (plot.log_y) {
    const int span = static_cast<int>(y1 - y0);
    const int stride = std::max(1, span / 8);
    for (int e = static_cast<int>(y0); e <= static_cast<int>(y1); e += stride) {
      yticks.emplace_back(e, "1e" + std::to_string(e));
    }
  } else {
    yticks = linear_ticks(y0, y1);
  }

  std::ostringstream o;
  open_svg(o, plot.title);
  axes(o, f, plot.x_label, plot.y_label, linear_ticks(x0, x1), yticks);
  double legend_y = kTop + 10;
  for (const auto& s : plot.series) {
    o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
      << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
    bool first = true;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      const double y = plot.log_y ? std::log10(s.y[i]) : s.y[i];
      o << (first ? "" : " ") << num(f.px(s.x[i])) << ',' << num(f.py(y));
      first = false;
    }
    o << "\"/>\n";
    const double lx = kWidth - kRight + 12;
    o << "<line x1=\"" << num(lx) << "\" y1=\"" << num(legend_y) << "\" x2=\"" << num(lx + 22)
      << "\" y2=\"" << num(legend_y) << "\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
      << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n"
      << "<text x=\"" << num(lx + 28) << "\" y=\"" << num(legend_y + 4)
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape_xml(s.label) << "</text>\n";
    legend_y += 18;
  }
  o << "</svg>\n";
  return o.str();
}

std::string svg_histogram(const std::vector<double>& values, std::size_t bins,
                          const std::string& title, const std::string& x_label) {
  bins = std::max<std::size_t>(bins, 1);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
  if (!(hi > lo)) hi = lo + 1.0;
  std::vector<double> counts(bins, 0.0);
  std::size_t total = 0;
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
    counts[std::min(b, bins - 1)] += 1.0;
    ++total;
  }
  const double width = (hi - lo) / static_cast<double>(bins);
  double peak = 0.0;
  for (double& c : counts) {
    c = total ? c / (static_cast<double>(total) * width) : 0.0;
    peak = std::max(peak, c);
  }
  const Frame f{lo, hi, 0.0, peak > 0.0 ? peak * 1.05 : 1.0};
  std::ostringstream o;
  open_svg(o, title);
  axes(o, f, x_label, "density", linear_ticks(lo, hi), linear_ticks(0.0, f.y1));
  o << "<g fill=\"#1f77b4\" fill-opacity=\"0.7\" stroke=\"#0b3d66\" stroke-width=\"0.5\">\n";
  for (std::size_t b = 0; b < bins; ++b) {
    const double xa = f.px(lo + static_cast<double>(b) * width);
    const double xb = f.px(lo + static_cast<double>(b + 1) * width);
    const double top = f.py(counts[b]);
    o << "<rect x=\"" << num(xa) << "\" y=\"" << num(top) << "\" width=\"" << num(xb - xa)
      << "\" height=\"" << num(f.py(0.0) - top) << "\"/>\n";
  }
  o << "</g>\n</svg>\n";
  return o.str();
}

}  // namespace tiltlab::cli
