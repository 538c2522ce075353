#include "plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <tuple>

#include "modgrok/errors.hpp"

namespace modgrok::cli {
namespace {

constexpr double kWidth = 720;
constexpr double kHeight = 440;
constexpr double kLeft = 70;
constexpr double kRight = 20;
constexpr double kTop = 40;
constexpr double kBottom = 50;

const std::array<const char*, 6> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string fmt(const char* f, double v) {
  std::array<char, 48> buf{};
  std::snprintf(buf.data(), buf.size(), f, v);
  return buf.data();
}
std::string px(double v) { return fmt("%.2f", v); }

std::string escape(const std::string& s) {
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

bool is_number(const std::string& s) {
  if (s.empty()) return false;
  char* end = nullptr;
  std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Axes {
  double x0, x1, y0, y1;
  bool log_y = false;

  double sx(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  double sy(double y) const {
    const double v = log_y ? std::log10(std::max(y, std::pow(10.0, y0))) : y;
    return kHeight - kBottom - (v - y0) / (y1 - y0) * (kHeight - kTop - kBottom);
  }
};

class Svg {
 public:
  explicit Svg(const std::string& title) {
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
         << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
         << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
         << "<text x=\"" << px(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
         << "</text>\n";
  }
  void raw(const std::string& s) { out_ << s; }
  void text(double x, double y, const std::string& s, const char* anchor = "middle") {
    out_ << "<text x=\"" << px(x) << "\" y=\"" << px(y) << "\" text-anchor=\"" << anchor << "\">" << escape(s)
         << "</text>\n";
  }
  void line(double x1, double y1, double x2, double y2, const char* stroke, double width = 1) {
    out_ << "<line x1=\"" << px(x1) << "\" y1=\"" << px(y1) << "\" x2=\"" << px(x2) << "\" y2=\"" << px(y2)
         << "\" stroke=\"" << stroke << "\" stroke-width=\"" << px(width) << "\"/>\n";
  }
  void rect(double x, double y, double w, double h, const std::string& fill) {
    out_ << "<rect x=\"" << px(x) << "\" y=\"" << px(y) << "\" width=\"" << px(w) << "\" height=\"" << px(h)
         << "\" fill=\"" << fill << "\"/>\n";
  }
  std::string finish() {
    out_ << "</svg>\n";
    return out_.str();
  }

 private:
  std::ostringstream out_;
};

void draw_axes(Svg& svg, const Axes& ax, const std::string& xlabel, const std::string& ylabel, bool x_ticks = true) {
  const double bottom = kHeight - kBottom;
  svg.line(kLeft, bottom, kWidth - kRight, bottom, "black");
  svg.line(kLeft, kTop, kLeft, bottom, "black");
  if (x_ticks) {
    for (int i = 0; i <= 5; ++i) {
      const double xv = ax.x0 + (ax.x1 - ax.x0) * i / 5.0;
      const double x = ax.sx(xv);
      svg.line(x, bottom, x, bottom + 4, "black");
      svg.text(x, bottom + 16, fmt("%.4g", xv));
    }
  }
  std::vector<double> yticks;
  if (ax.log_y) {
    const double step = std::max(1.0, std::ceil((ax.y1 - ax.y0) / 8.0));
    for (double d = ax.y0; d <= ax.y1 + 1e-9; d += step) yticks.push_back(d);
  } else {
    for (int i = 0; i <= 5; ++i) yticks.push_back(ax.y0 + (ax.y1 - ax.y0) * i / 5.0);
  }
  for (double yv : yticks) {
    const double y = kHeight - kBottom - (yv - ax.y0) / (ax.y1 - ax.y0) * (kHeight - kTop - kBottom);
    svg.line(kLeft - 4, y, kLeft, y, "black");
    svg.text(kLeft - 6, y + 4, ax.log_y ? "1e" + fmt("%.0f", yv) : fmt("%.3g", yv), "end");
  }
  svg.text((kLeft + kWidth - kRight) / 2, kHeight - 12, xlabel);
  svg.raw("<text transform=\"translate(16," + px((kTop + bottom) / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
          escape(ylabel) + "</text>\n");
}

void draw_legend(Svg& svg, const std::vector<Series>& series) {
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double y = kTop + 8 + 14.0 * static_cast<double>(i);
    svg.line(kWidth - kRight - 110, y, kWidth - kRight - 90, y, kPalette[i % kPalette.size()], 2);
    svg.text(kWidth - kRight - 86, y + 4, series[i].label, "start");
  }
}

std::string line_chart(const std::string& title, const std::vector<Series>& series, const std::string& xlabel,
                       const std::string& ylabel, bool log_y, std::optional<std::pair<double, double>> y_range = {}) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : s.y) {
      if (log_y && !(v > 0.0)) continue;
      const double t = log_y ? std::log10(v) : v;
      y0 = std::min(y0, t), y1 = std::max(y1, t);
    }
  }
  if (y_range) std::tie(y0, y1) = *y_range;
  if (!(x1 > x0)) x1 = x0 + 1;
  if (!(y1 > y0)) y1 = y0 + 1;
  if (log_y) y0 = std::floor(y0), y1 = std::ceil(y1);
  const Axes ax{x0, x1, y0, y1, log_y};

  Svg svg(title);
  draw_axes(svg, ax, xlabel, ylabel);
  for (std::size_t i = 0; i < series.size(); ++i) {
    std::string pts;
    for (std::size_t j = 0; j < series[i].x.size(); ++j) {
      pts += (j ? " " : "") + px(ax.sx(series[i].x[j])) + ',' + px(ax.sy(series[i].y[j]));
    }
    svg.raw("<polyline fill=\"none\" stroke=\"" + std::string(kPalette[i % kPalette.size()]) +
            "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n");
  }
  draw_legend(svg, series);
  return svg.finish();
}

std::string bar_chart(const std::string& title, const std::vector<std::string>& labels, const std::vector<double>& y,
                      const std::vector<bool>& marked, const std::string& xlabel, const std::string& ylabel, bool log_y,
                      std::optional<double> guide = {}) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double v : y) {
    if (log_y && v > 0.0) lo = std::min(lo, std::log10(v)), hi = std::max(hi, std::log10(v));
    if (!log_y) hi = std::max(hi, v);
  }
  Axes ax{0.0, static_cast<double>(y.size()), 0.0, hi > 0.0 ? hi : 1.0, log_y};
  if (log_y) ax.y0 = std::isfinite(lo) ? std::floor(lo) : -1.0, ax.y1 = std::isfinite(lo) ? std::ceil(hi) + 0.0 : 0.0;
  if (!(ax.y1 > ax.y0)) ax.y1 = ax.y0 + 1;

  if (guide && !log_y) ax.y1 = std::max(ax.y1, *guide);

  Svg svg(title);
  draw_axes(svg, ax, xlabel, ylabel, false);
  const double slot = (kWidth - kLeft - kRight) / static_cast<double>(std::max<std::size_t>(y.size(), 1));
  const std::size_t label_every = std::max<std::size_t>(1, y.size() / 28);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double x = kLeft + slot * static_cast<double>(i);
    const double top = ax.sy(log_y ? std::max(y[i], std::pow(10.0, ax.y0)) : y[i]);
    svg.rect(x + slot * 0.1, top, slot * 0.8, kHeight - kBottom - top, marked[i] ? "#d62728" : "#9e9e9e");
    if (marked[i] || i % label_every == 0) svg.text(x + slot / 2, kHeight - kBottom + 16, labels[i]);
  }
  if (guide) {
    const double gy = ax.sy(*guide);
    svg.raw("<line x1=\"" + px(kLeft) + "\" y1=\"" + px(gy) + "\" x2=\"" + px(kWidth - kRight) + "\" y2=\"" + px(gy) +
            "\" stroke=\"#555555\" stroke-dasharray=\"4 3\"/>\n");
  }
  return svg.finish();
}

// Fixed five-stop ramp (dark blue → yellow), linearly interpolated.
std::string ramp(double t) {
  static const std::array<std::array<double, 3>, 5> stops = {
      {{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
  t = std::clamp(t, 0.0, 1.0) * 4.0;
  const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(t), 3);
  const double f = t - static_cast<double>(i);
  std::array<char, 8> buf{};
  const auto c = [&](int ch) { return static_cast<int>(std::lround(stops[i][ch] + f * (stops[i + 1][ch] - stops[i][ch]))); };
  std::snprintf(buf.data(), buf.size(), "#%02x%02x%02x", c(0), c(1), c(2));
  return buf.data();
}

std::string heatmap(const std::string& title, const CsvTable& t) {
  const std::size_t n = t.rows.size();
  const std::size_t m = t.rows.front().size();
  std::vector<std::vector<double>> v(m);
  double hi = 0.0;
  for (std::size_t c = 0; c < m; ++c) {
    v[c] = t.numeric(c);
    for (double x : v[c]) hi = std::max(hi, x);
  }
  Svg svg(title);
  const double side = std::min(kWidth - kLeft - kRight - 60, kHeight - kTop - kBottom);
  const double cw = side / static_cast<double>(m);
  const double ch = side / static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < m; ++c)
      svg.rect(kLeft + cw * static_cast<double>(c), kTop + ch * static_cast<double>(r), cw, ch,
               ramp(hi > 0.0 ? v[c][r] / hi : 0.0));
  for (int i = 0; i <= 20; ++i)
    svg.rect(kLeft + side + 20, kTop + side * (20 - i) / 21.0, 16, side / 21.0, ramp(i / 20.0));
  svg.text(kLeft + side + 40, kTop + 8, fmt("%.3g", hi), "start");
  svg.text(kLeft + side + 40, kTop + side, "0", "start");
  svg.text(kLeft + side / 2, kTop + side + 20, "basis index (b)");
  svg.raw("<text transform=\"translate(" + px(kLeft - 20) + "," + px(kTop + side / 2) +
          ") rotate(-90)\" text-anchor=\"middle\">basis index (a)</text>\n");
  return svg.finish();
}

}  // namespace

std::vector<double> CsvTable::numeric(std::size_t column) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string& f = rows[i].at(column);
    if (!is_number(f)) {
      throw FormatError(source + ": line " + std::to_string(line_numbers[i]) + ": expected a number in column " +
                        std::to_string(column + 1) + ", got '" + f + "'");
    }
    out.push_back(std::strtod(f.c_str(), nullptr));
  }
  return out;
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw FormatError(source + ": line 1: missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable parse_csv(const std::string& text, const std::string& source) {
  CsvTable t;
  t.source = source;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    if (line.back() == ',') fields.emplace_back();
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (fields[i].empty()) {
        throw FormatError(source + ": line " + std::to_string(n) + ": empty field " + std::to_string(i + 1));
      }
    }
    if (t.header.empty() && t.rows.empty() && !is_number(fields.front())) {
      t.header = std::move(fields);
      continue;
    }
    const std::size_t width = t.header.empty() ? (t.rows.empty() ? fields.size() : t.rows.front().size()) : t.header.size();
    if (fields.size() != width) {
      throw FormatError(source + ": line " + std::to_string(n) + ": expected " + std::to_string(width) +
                        " fields, got " + std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.line_numbers.push_back(n);
  }
  if (t.rows.empty()) throw FormatError(source + ": line " + std::to_string(std::max<std::size_t>(n, 1)) + ": no data rows");
  return t;
}

PlotKind detect_kind(const CsvTable& t) {
  using V = std::vector<std::string>;
  if (t.header.empty()) return PlotKind::kMagnitude;
  if (t.header == V{"epoch", "train_loss", "test_loss", "train_acc", "test_acc"}) return PlotKind::kMetrics;
  if (t.header == V{"k", "cos_energy", "sin_energy", "total"} || t.header == V{"k", "a_energy", "b_energy", "total"})
    return PlotKind::kSpectrum;
  if (t.header == V{"matrix", "r", "sigma_r", "energy_fraction", "accuracy_full", "accuracy_test"})
    return PlotKind::kRankSweep;
  if (t.header == V{"k", "single_acc", "cumulative_acc"}) return PlotKind::kAblation;
  if (t.header == V{"k", "alpha", "beta", "rel_error"}) return PlotKind::kFits;
  std::string h;
  for (const auto& c : t.header) h += (h.empty() ? "" : ",") + c;
  throw FormatError(t.source + ": line 1: unrecognized CSV header '" + h + "'");
}

std::string render_svg(const CsvTable& t, const std::string& title, double threshold) {
  switch (detect_kind(t)) {
    case PlotKind::kMetrics: {
      const auto epoch = t.numeric(0);
      return line_chart(title, {{"train_loss", epoch, t.numeric(1)}, {"test_loss", epoch, t.numeric(2)}}, "epoch",
                        "loss", true);
    }
    case PlotKind::kSpectrum: {
      const auto total = t.numeric(3);
      double sum = 0.0;
      for (double v : total) sum += v;
      std::vector<double> share;
      std::vector<bool> marked;
      std::vector<std::string> labels;
      for (std::size_t i = 0; i < total.size(); ++i) {
        share.push_back(sum > 0.0 ? total[i] / sum : 0.0);
        marked.push_back(sum > 0.0 && share.back() >= threshold);
        labels.push_back(t.rows[i][0]);
      }
      return bar_chart(title, labels, share, marked, "frequency k", "share of non-DC energy", false, threshold);
    }
    case PlotKind::kMagnitude:
      return heatmap(title, t);
    case PlotKind::kRankSweep: {
      std::map<std::string, Series> by_matrix;
      std::vector<std::string> order;
      const auto r = t.numeric(1);
      const auto acc = t.numeric(4);
      for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const std::string& name = t.rows[i][0];
        if (!by_matrix.count(name)) order.push_back(name), by_matrix[name].label = name;
        by_matrix[name].x.push_back(r[i]);
        by_matrix[name].y.push_back(acc[i]);
      }
      std::vector<Series> series;
      for (const auto& name : order) series.push_back(by_matrix[name]);
      return line_chart(title, series, "rank r", "full-grid accuracy", false, std::pair{0.0, 1.0});
    }
    case PlotKind::kAblation: {
      std::vector<double> idx(t.rows.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<double>(i + 1);
      return line_chart(title, {{"single", idx, t.numeric(1)}, {"cumulative", idx, t.numeric(2)}},
                        "ablation step (pair order)", "accuracy", false, std::pair{0.0, 1.0});
    }
    case PlotKind::kFits: {
      const auto err = t.numeric(3);
      std::vector<std::string> labels;
      for (const auto& row : t.rows) labels.push_back(row[0]);
      return bar_chart(title, labels, err, std::vector<bool>(err.size(), false), "frequency k (two fits each)",
                       "relative error", true);
    }
  }
  return {};
}

}  // namespace modgrok::cli
