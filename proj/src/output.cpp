#include "qtraj/output.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace qtraj {

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw OutputError("cannot write " + path.string());
  return out;
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void emit_csv(const EnsembleStats& stats, const std::string& observable, const std::filesystem::path& path) {
  if (stats.tau.empty()) throw OutputError("no data to write for " + observable);
  const int o = stats.index_of(observable);
  std::ostringstream body;
  body << "tau," << observable << ",stderr\n";
  for (std::size_t t = 0; t < stats.tau.size(); ++t) {
    body << format_number(stats.tau[t]) << ',' << format_number(stats.mean[o][t]) << ','
         << format_number(stats.stderr_[o][t]) << '\n';
  }
  std::ofstream out = open_for_write(path);
  out << body.str();
  if (!out) throw OutputError("failed writing " + path.string());
}

std::vector<std::filesystem::path> emit_all_csv(const EnsembleStats& stats, const std::filesystem::path& dir,
                                                const std::string& prefix) {
  std::vector<std::filesystem::path> paths;
  for (const std::string& name : stats.names) {
    std::filesystem::path p = dir / (prefix + "_" + name + ".csv");
    emit_csv(stats, name, p);
    paths.push_back(p);
  }
  return paths;
}

void RunManifest::write(const std::filesystem::path& path) const {
  std::ofstream out = open_for_write(path);
  for (const auto& [k, v] : entries) out << k << " = " << v << '\n';
  if (!out) throw OutputError("failed writing " + path.string());
}

void write_svg_plot(const std::filesystem::path& path, const std::string& title, const std::string& xlabel,
                    const std::vector<PlotSeries>& series) {
  constexpr double W = 640, H = 420, L = 70, R = 20, T = 40, B = 50;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const PlotSeries& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double e = s.err.empty() ? 0.0 : s.err[i];
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i] - e);
      y1 = std::max(y1, s.y[i] + e);
    }
  }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  static const char* colors[] = {"#000000", "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e"};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = x0 + (x1 - x0) * i / 5.0, yv = y0 + (y1 - y0) * i / 5.0;
    svg << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\" font-size=\"11\">"
        << std::setprecision(3) << xv << "</text>\n";
    svg << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\" font-size=\"11\">"
        << std::setprecision(3) << yv << "</text>\n";
  }
  svg << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"13\">" << xlabel
      << "</text>\n";
  if (y0 < 0.0 && y1 > 0.0) {
    svg << "<line x1=\"" << L << "\" y1=\"" << py(0) << "\" x2=\"" << W - R << "\" y2=\"" << py(0)
        << "\" stroke=\"#bbbbbb\" stroke-dasharray=\"2,3\"/>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const PlotSeries& ps = series[s];
    const char* color = colors[s % 6];
    auto polyline = [&](double sign, const char* extra) {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" " << extra << " points=\"";
      for (std::size_t i = 0; i < ps.x.size(); ++i) {
        const double e = ps.err.empty() ? 0.0 : sign * ps.err[i];
        svg << px(ps.x[i]) << ',' << py(ps.y[i] + e) << ' ';
      }
      svg << "\"/>\n";
    };
    polyline(0.0, ps.dashed ? "stroke-width=\"1.6\" stroke-dasharray=\"6,4\"" : "stroke-width=\"1.6\"");
    if (!ps.err.empty()) {
      polyline(1.0, "stroke-width=\"0.6\" stroke-opacity=\"0.6\"");
      polyline(-1.0, "stroke-width=\"0.6\" stroke-opacity=\"0.6\"");
    }
    svg << "<text x=\"" << W - R - 160 << "\" y=\"" << T + 16 * (s + 1) << "\" font-size=\"12\" fill=\"" << color
        << "\">" << ps.label << "</text>\n";
  }
  svg << "</svg>\n";
  std::ofstream out = open_for_write(path);
  out << svg.str();
}

}  // namespace qtraj
