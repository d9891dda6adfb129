#pragma once

// Two-panel static SVG: the signal coloured by MAP class (top) and the MAP
// run length with declared change points (bottom).

#include "ihcpd/cli/io.hpp"
#include "ihcpd/detector.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>

namespace ihcpd::cli {

// Fixed palette for the first ten classes, golden-angle hues after that.
inline std::string class_colour(std::size_t k) {
  static constexpr const char *kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                             "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  if (k >= 1 && k <= std::size(kPalette)) return kPalette[k - 1];
  const double hue = std::fmod(static_cast<double>(k) * 137.50776405, 360.0);
  const double s = 0.65;
  const double l = 0.5;
  const double c = (1.0 - std::abs(2.0 * l - 1.0)) * s;
  const double hp = hue / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) { r = c; g = x; }
  else if (hp < 2) { r = x; g = c; }
  else if (hp < 3) { g = c; b = x; }
  else if (hp < 4) { g = x; b = c; }
  else if (hp < 5) { r = x; b = c; }
  else { r = c; b = x; }
  const double m = l - c / 2.0;
  auto channel = [&](double v) { return static_cast<int>(std::lround((v + m) * 255.0)); };
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", channel(r), channel(g), channel(b));
  return buf;
}

inline std::string render_svg_markup(std::span<const double> series, const RunResult &result) {
  if (result.steps.empty()) throw InputError("render_svg: empty trace");
  require(series.size() == result.steps.size(), "render_svg: series and trace lengths differ");

  constexpr double width = 1000.0;
  constexpr double panel_h = 260.0;
  constexpr double margin_l = 60.0;
  constexpr double margin_r = 20.0;
  constexpr double gap = 40.0;
  constexpr double top1 = 20.0;
  constexpr double top2 = top1 + panel_h + gap;
  constexpr double height = top2 + panel_h + 30.0;
  const double plot_w = width - margin_l - margin_r;
  const std::size_t n = series.size();

  const auto [xmin_it, xmax_it] = std::minmax_element(series.begin(), series.end());
  double lo = *xmin_it;
  double hi = *xmax_it;
  if (hi == lo) { lo -= 1.0; hi += 1.0; }
  std::size_t rmax = 1;
  for (const auto &s : result.steps) rmax = std::max(rmax, s.r_star);

  auto px = [&](std::size_t i) { return margin_l + plot_w * (n == 1 ? 0.5 : static_cast<double>(i) / (n - 1)); };
  auto py_signal = [&](double v) { return top1 + panel_h * (1.0 - (v - lo) / (hi - lo)); };
  auto py_run = [&](std::size_t r) { return top2 + panel_h * (1.0 - static_cast<double>(r) / rmax); };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";

  svg << "<g id=\"signal\">\n";
  svg << "<rect x=\"" << margin_l << "\" y=\"" << top1 << "\" width=\"" << plot_w << "\" height=\"" << panel_h
      << "\" fill=\"none\" stroke=\"#444444\"/>\n";
  svg << "<text x=\"5\" y=\"" << top1 + 10 << "\" font-size=\"10\">" << num(hi) << "</text>\n";
  svg << "<text x=\"5\" y=\"" << top1 + panel_h << "\" font-size=\"10\">" << num(lo) << "</text>\n";
  for (std::size_t i = 0; i < n; ++i) {
    svg << "<circle cx=\"" << num(px(i)) << "\" cy=\"" << num(py_signal(series[i])) << "\" r=\"1.5\" fill=\""
        << class_colour(result.steps[i].z_star) << "\"/>\n";
  }
  svg << "</g>\n";

  svg << "<g id=\"runlength\">\n";
  svg << "<rect x=\"" << margin_l << "\" y=\"" << top2 << "\" width=\"" << plot_w << "\" height=\"" << panel_h
      << "\" fill=\"none\" stroke=\"#444444\"/>\n";
  svg << "<text x=\"5\" y=\"" << top2 + 10 << "\" font-size=\"10\">" << rmax << "</text>\n";
  svg << "<text x=\"5\" y=\"" << top2 + panel_h << "\" font-size=\"10\">0</text>\n";
  for (std::size_t t : result.changepoints) {
    const double x = px(t - 1);
    svg << "<line class=\"cp\" x1=\"" << num(x) << "\" y1=\"" << top2 << "\" x2=\"" << num(x) << "\" y2=\""
        << top2 + panel_h << "\" stroke=\"#d00000\" stroke-dasharray=\"4,3\"/>\n";
  }
  svg << "<polyline fill=\"none\" stroke=\"#000000\" stroke-width=\"1\" points=\"";
  for (std::size_t i = 0; i < n; ++i) {
    if (i) svg << ' ';
    svg << num(px(i)) << ',' << num(py_run(result.steps[i].r_star));
  }
  svg << "\"/>\n";
  svg << "</g>\n";
  svg << "<text x=\"" << margin_l << "\" y=\"" << height - 8 << "\" font-size=\"11\">t = 1 .. " << n
      << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

// Writes outdir/plot.svg; nothing is written when the trace is empty.
inline std::filesystem::path render_svg(std::span<const double> series, const RunResult &result,
                                        const std::filesystem::path &outdir) {
  const std::string markup = render_svg_markup(series, result);
  ensure_directory(outdir);
  const std::filesystem::path path = outdir / "plot.svg";
  write_file(path, markup);
  return path;
}

} // namespace ihcpd::cli
