// Copyright 2026 The Blindspot Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "blindspot/plots.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "blindspot/error.hpp"
#include "blindspot/persistence.hpp"

namespace blindspot {

namespace {

constexpr double kW = 720, kH = 420;
constexpr double kLeft = 70, kRight = 160, kTop = 40, kBottom = 70;
constexpr const char* kPalette[] = {"#4477aa", "#ee6677", "#228833", "#ccbb44", "#66ccee", "#aa3377", "#bbbbbb",
                                    "#332288", "#117733"};

const char* colour(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

double num(const std::string& s) {
  if (s == "NA" || s.empty()) return std::nan("");
  try {
    return std::stod(s);
  } catch (const std::logic_error&) {
    fail(ErrorCode::kSchema, fmt::format("non-numeric table cell '{}'", s));
  }
}

class Svg {
 public:
  explicit Svg(std::string_view title) {
    body_ = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
        "font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
        kW, kH);
    text(kW / 2, 22, title, "middle", 14);
  }

  void text(double x, double y, std::string_view s, std::string_view anchor = "start", int size = 11,
            double rotate = 0) {
    body_ += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"{}\" font-size=\"{}\"", x, y, anchor, size);
    if (rotate != 0) body_ += fmt::format(" transform=\"rotate({} {:.1f} {:.1f})\"", rotate, x, y);
    body_ += fmt::format(">{}</text>\n", escape(s));
  }
  void line(double x1, double y1, double x2, double y2, std::string_view stroke, double width = 1,
            std::string_view dash = "") {
    body_ += fmt::format("<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"{}\" stroke-width=\"{}\"",
                         x1, y1, x2, y2, stroke, width);
    if (!dash.empty()) body_ += fmt::format(" stroke-dasharray=\"{}\"", dash);
    body_ += "/>\n";
  }
  void rect(double x, double y, double w, double h, std::string_view fill) {
    body_ += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"{}\"/>\n", x, y, w,
                         h, fill);
  }
  void circle(double x, double y, double r, std::string_view fill) {
    body_ += fmt::format("<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"{}\" fill=\"{}\"/>\n", x, y, r, fill);
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, std::string_view stroke) {
    body_ += "<polyline fill=\"none\" stroke-width=\"2\" stroke=\"" + std::string(stroke) + "\" points=\"";
    for (auto [x, y] : pts) body_ += fmt::format("{:.1f},{:.1f} ", x, y);
    body_ += "\"/>\n";
  }
  void legend(const std::vector<std::string>& names) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      const double y = kTop + 14 * i;
      rect(kW - kRight + 12, y, 10, 10, colour(i));
      text(kW - kRight + 26, y + 9, names[i]);
    }
  }
  std::string str() const { return body_ + "</svg>\n"; }

 private:
  std::string body_;
};

// Plot area mapping.
double px(double t) { return kLeft + t * (kW - kLeft - kRight); }
double py(double v) { return kH - kBottom - v * (kH - kTop - kBottom); }

void y_axis(Svg& svg, std::string_view label, double lo = 0.0, double hi = 1.0) {
  for (int i = 0; i <= 5; ++i) {
    const double t = i / 5.0;
    svg.line(kLeft, py(t), kW - kRight, py(t), "#e0e0e0");
    svg.text(kLeft - 6, py(t) + 4, fmt::format("{:.2g}", lo + t * (hi - lo)), "end");
  }
  svg.line(kLeft, py(0), kLeft, py(1), "black");
  svg.line(kLeft, py(0), kW - kRight, py(0), "black");
  svg.text(18, (py(0) + py(1)) / 2, label, "middle", 11, -90);
}

}  // namespace

std::size_t Table::column(std::string_view name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) fail(ErrorCode::kSchema, fmt::format("table has no column '{}'", name));
  return static_cast<std::size_t>(it - header.begin());
}

Table parse_tsv(std::string_view text) {
  Table t;
  std::size_t start = 0;
  bool first = true;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t a = 0;
    while (true) {
      const auto b = line.find('\t', a);
      cells.emplace_back(line.substr(a, b == std::string_view::npos ? std::string_view::npos : b - a));
      if (b == std::string_view::npos) break;
      a = b + 1;
    }
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      if (cells.size() != t.header.size()) {
        fail(ErrorCode::kSchema, fmt::format("row has {} cells, header {}", cells.size(), t.header.size()));
      }
      t.rows.push_back(std::move(cells));
    }
  }
  if (first) fail(ErrorCode::kSchema, "table has no header row");
  return t;
}

Table read_tsv(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    fail(ErrorCode::kNotFound, fmt::format("table '{}' not found; run eval first", path.string()));
  }
  return parse_tsv(read_text_file(path));
}

std::string svg_bars(const Table& bars) {
  const auto c_src = bars.column("train_source");
  const std::vector<std::string> families = {"ID", "OOD", "AA"};
  std::vector<std::size_t> cols;
  for (const auto& f : families) cols.push_back(bars.column(f));

  // mean over seeds
  std::vector<std::string> groups;
  std::map<std::string, std::vector<std::pair<double, int>>> acc;
  for (const auto& r : bars.rows) {
    const auto& g = r[c_src];
    if (!acc.contains(g)) {
      groups.push_back(g);
      acc[g].assign(families.size(), {0.0, 0});
    }
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const double v = num(r[cols[k]]);
      if (std::isnan(v)) continue;
      acc[g][k].first += v;
      acc[g][k].second += 1;
    }
  }
  Svg svg("Mentor accuracy by training source and test error type");
  y_axis(svg, "balanced accuracy");
  const double gw = 1.0 / std::max<std::size_t>(1, groups.size());
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const double bw = gw * 0.8 / families.size();
    for (std::size_t k = 0; k < families.size(); ++k) {
      const auto [sum, n] = acc[groups[gi]][k];
      if (n == 0) continue;
      const double v = sum / n;
      const double x0 = px(gi * gw + gw * 0.1 + k * bw);
      svg.rect(x0, py(v), px(bw) - px(0), py(0) - py(v), colour(k));
    }
    svg.text(px(gi * gw + gw / 2), py(0) + 16, groups[gi], "middle");
  }
  svg.text((px(0) + px(1)) / 2, kH - 20, "mentor training source", "middle");
  svg.legend(families);
  return svg.str();
}

std::string svg_severity(const Table& severity) {
  const auto c_m = severity.column("mentor");
  const auto c_s = severity.column("sigma");
  const auto c_a = severity.column("mentor_accuracy");
  std::vector<std::string> names;
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  std::vector<double> sigmas;
  for (const auto& r : severity.rows) {
    if (!series.contains(r[c_m])) names.push_back(r[c_m]);
    const double s = num(r[c_s]);
    series[r[c_m]].push_back({s, num(r[c_a])});
    if (std::find(sigmas.begin(), sigmas.end(), s) == sigmas.end()) sigmas.push_back(s);
  }
  std::sort(sigmas.begin(), sigmas.end());
  auto xpos = [&](double s) {
    const auto i = std::find(sigmas.begin(), sigmas.end(), s) - sigmas.begin();
    return px(sigmas.size() > 1 ? static_cast<double>(i) / (sigmas.size() - 1) : 0.5);
  };
  Svg svg("Mentor accuracy against speckle noise level");
  y_axis(svg, "balanced accuracy");
  for (double s : sigmas) svg.text(xpos(s), py(0) + 16, fmt::format("{}", s), "middle");
  svg.text((px(0) + px(1)) / 2, kH - 20, "speckle sigma", "middle");
  for (std::size_t i = 0; i < names.size(); ++i) {
    std::vector<std::pair<double, double>> pts;
    for (auto [s, a] : series[names[i]]) {
      if (std::isnan(a)) continue;
      pts.push_back({xpos(s), py(a)});
      svg.circle(xpos(s), py(a), 3, colour(i));
    }
    svg.polyline(pts, colour(i));
  }
  svg.legend(names);
  return svg.str();
}

std::string svg_scatter(const Table& scatter) {
  const auto c_m = scatter.column("mentor");
  const auto c_x = scatter.column("same_mentee");
  const auto c_y = scatter.column("cross_mentee");
  Svg svg("Same-mentee against cross-mentee accuracy");
  y_axis(svg, "cross-mentee accuracy");
  for (int i = 0; i <= 5; ++i) svg.text(px(i / 5.0), py(0) + 16, fmt::format("{:.2g}", i / 5.0), "middle");
  svg.text((px(0) + px(1)) / 2, kH - 20, "same-mentee accuracy", "middle");
  svg.line(px(0), py(0), px(1), py(1), "#888888", 1, "4 3");
  std::vector<std::string> names;
  for (std::size_t i = 0; i < scatter.rows.size(); ++i) {
    const auto& r = scatter.rows[i];
    const double x = num(r[c_x]), y = num(r[c_y]);
    names.push_back(r[c_m]);
    if (std::isnan(x) || std::isnan(y)) continue;
    svg.circle(px(x), py(y), 5, colour(i));
  }
  svg.legend(names);
  return svg.str();
}

std::string svg_grid(const Table& grid) {
  if (grid.header.size() < 4) fail(ErrorCode::kSchema, "grid table needs source columns");
  const std::size_t first = 2, last = grid.header.size();  // test columns plus row_mean
  const double cw = (kW - kLeft - 40) / (last - first);
  const double ch = std::min(40.0, (kH - kTop - kBottom) / std::max<std::size_t>(1, grid.rows.size()));
  Svg svg("Balanced accuracy by training (rows) and test (columns) source");
  for (std::size_t j = first; j < last; ++j) {
    svg.text(kLeft + 40 + (j - first + 0.5) * cw, kTop + 14, grid.header[j], "middle", 9);
  }
  for (std::size_t i = 0; i < grid.rows.size(); ++i) {
    const double y = kTop + 22 + i * ch;
    svg.text(kLeft + 36, y + ch / 2 + 4, grid.rows[i][0], "end", 9);
    for (std::size_t j = first; j < last; ++j) {
      const double v = num(grid.rows[i][j]);
      const double x = kLeft + 40 + (j - first) * cw;
      if (std::isnan(v)) {
        svg.rect(x, y, cw - 1, ch - 1, "#dddddd");
        svg.text(x + cw / 2, y + ch / 2 + 4, "NA", "middle", 9);
        continue;
      }
      const int shade = static_cast<int>(255 - 200 * std::clamp(v, 0.0, 1.0));
      svg.rect(x, y, cw - 1, ch - 1,
               j + 1 == last ? fmt::format("rgb(255,{},{})", shade, shade) : fmt::format("rgb({},{},255)", shade, shade));
      svg.text(x + cw / 2, y + ch / 2 + 4, fmt::format("{:.1f}", 100 * v), "middle", 9);
    }
  }
  return svg.str();
}

std::string svg_landscape(const Table& landscape) {
  const auto c_m = landscape.column("mentor");
  const auto c_x = landscape.column("magnitude");
  const auto c_a = landscape.column("accuracy");
  std::vector<std::string> names;
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  double xmax = 0.0;
  for (const auto& r : landscape.rows) {
    if (!series.contains(r[c_m])) names.push_back(r[c_m]);
    series[r[c_m]].push_back({num(r[c_x]), num(r[c_a])});
    xmax = std::max(xmax, std::abs(num(r[c_x])));
  }
  if (xmax == 0.0) xmax = 1.0;
  Svg svg("Average accuracy under weight perturbation");
  y_axis(svg, "average accuracy");
  for (int i = 0; i <= 4; ++i) svg.text(px(i / 4.0), py(0) + 16, fmt::format("{:.3g}", xmax * i / 4.0), "middle");
  svg.text((px(0) + px(1)) / 2, kH - 20, "perturbation magnitude", "middle");
  for (std::size_t i = 0; i < names.size(); ++i) {
    auto pts = series[names[i]];
    std::sort(pts.begin(), pts.end());
    std::vector<std::pair<double, double>> xy;
    for (auto [m, a] : pts) xy.push_back({px(m / xmax), py(a)});
    svg.polyline(xy, colour(i));
  }
  svg.legend(names);
  return svg.str();
}

std::string svg_report(const EvaluationReport& report) {
  Svg svg(fmt::format("{} (average {:.1f}%)", report.mentor_id, 100 * report.average));
  y_axis(svg, "balanced accuracy");
  const std::size_t n = report.per_source.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = report.per_source[i];
    const double w = 1.0 / std::max<std::size_t>(1, n);
    const double x0 = px(i * w + 0.1 * w);
    svg.rect(x0, py(e.balanced_accuracy), px(0.8 * w) - px(0), py(0) - py(e.balanced_accuracy),
             colour(static_cast<std::size_t>(e.source.family())));
    svg.text(px(i * w + w / 2), py(0) + 12, e.source.id(), "end", 9, -35);
  }
  svg.line(px(0), py(report.average), px(1), py(report.average), "#aa3377", 1, "4 3");
  return svg.str();
}

}  // namespace blindspot
