#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "positivity/density.hpp"
#include "positivity/violation.hpp"

namespace positivity {

namespace detail {

inline std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace detail

// Overlaid per-group normalized histograms over [0,1] (control orange,
// treated blue). Under the axis: a black tick for each suspected bin, a green
// X for each bin with raw p < alpha, a red circle for each bin significant
// after FDR.
inline std::string render_histogram_svg(const GroupHistograms& hist, const ViolationReport& report, double alpha) {
  constexpr double kWidth = 900.0;
  constexpr double kHeight = 440.0;
  constexpr double kLeft = 60.0;
  constexpr double kRight = 860.0;
  constexpr double kTop = 50.0;
  constexpr double kBase = 340.0;
  const double bin_width = (kRight - kLeft) / static_cast<double>(hist.bins);

  auto share = [&](int group, std::size_t i) {
    const std::size_t n = hist.group_size(group);
    return n == 0 ? 0.0 : static_cast<double>(hist.counts(group)[i]) / static_cast<double>(n);
  };
  double peak = 0.0;
  for (std::size_t i = 0; i < hist.bins; ++i) peak = std::max({peak, share(0, i), share(1, i)});
  if (peak <= 0.0) peak = 1.0;

  using detail::px;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px(kWidth) << "\" height=\"" << px(kHeight)
      << "\" viewBox=\"0 0 " << px(kWidth) << ' ' << px(kHeight) << "\">\n";
  out << "<rect class=\"background\" x=\"0\" y=\"0\" width=\"" << px(kWidth) << "\" height=\"" << px(kHeight)
      << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << px(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"16\">Propensity score distribution by treatment group</text>\n";

  const char* colors[2] = {"#ff7f0e", "#1f77b4"};
  const char* names[2] = {"control", "treated"};
  for (int group : {0, 1}) {
    for (std::size_t i = 0; i < hist.bins; ++i) {
      const double h = share(group, i) / peak * (kBase - kTop);
      out << "<rect class=\"bar " << names[group] << "\" x=\"" << px(kLeft + bin_width * static_cast<double>(i))
          << "\" y=\"" << px(kBase - h) << "\" width=\"" << px(bin_width) << "\" height=\"" << px(h)
          << "\" fill=\"" << colors[group] << "\" fill-opacity=\"0.55\"/>\n";
    }
  }

  out << "<line class=\"axis\" x1=\"" << px(kLeft) << "\" y1=\"" << px(kBase) << "\" x2=\"" << px(kRight)
      << "\" y2=\"" << px(kBase) << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double x = kLeft + (kRight - kLeft) * k / 4.0;
    char label[8];
    std::snprintf(label, sizeof(label), "%.2f", k / 4.0);
    out << "<text x=\"" << px(x) << "\" y=\"" << px(kBase + 60) << "\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"12\">" << label << "</text>\n";
  }
  out << "<text x=\"" << px(kWidth / 2) << "\" y=\"" << px(kBase + 80) << "\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"13\">propensity score</text>\n";

  auto centre = [&](std::size_t bin) { return kLeft + bin_width * (static_cast<double>(bin) + 0.5); };
  for (std::size_t bin : report.suspected) {
    out << "<line class=\"marker suspected\" x1=\"" << px(centre(bin)) << "\" y1=\"" << px(kBase + 4)
        << "\" x2=\"" << px(centre(bin)) << "\" y2=\"" << px(kBase + 14) << "\" stroke=\"black\"/>\n";
  }
  for (const auto& t : report.tests) {
    if (!(t.p_raw < alpha)) continue;
    const double x = centre(t.bin);
    const double y = kBase + 24;
    out << "<path class=\"marker raw-significant\" d=\"M" << px(x - 4) << ' ' << px(y - 4) << " L" << px(x + 4)
        << ' ' << px(y + 4) << " M" << px(x - 4) << ' ' << px(y + 4) << " L" << px(x + 4) << ' ' << px(y - 4)
        << "\" stroke=\"green\" stroke-width=\"1.5\"/>\n";
  }
  for (const auto& t : report.tests) {
    if (!t.significant) continue;
    out << "<circle class=\"marker fdr-significant\" cx=\"" << px(centre(t.bin)) << "\" cy=\"" << px(kBase + 38)
        << "\" r=\"4\" fill=\"none\" stroke=\"red\" stroke-width=\"1.5\"/>\n";
  }

  const double lx = kRight - 210;
  out << "<g class=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n";
  for (int group : {0, 1}) {
    const double y = kTop + 18.0 * group;
    out << "<rect class=\"legend-swatch\" x=\"" << px(lx) << "\" y=\"" << px(y - 9) << "\" width=\"10\" "
        << "height=\"10\" fill=\"" << colors[group] << "\" fill-opacity=\"0.55\"/>\n";
    out << "<text x=\"" << px(lx + 16) << "\" y=\"" << px(y) << "\">" << names[group] << " (T=" << group
        << ")</text>\n";
  }
  out << "<text x=\"" << px(lx) << "\" y=\"" << px(kTop + 36) << "\" fill=\"black\">| suspected bin</text>\n";
  out << "<text x=\"" << px(lx) << "\" y=\"" << px(kTop + 54) << "\" fill=\"green\">x raw p &lt; alpha</text>\n";
  out << "<text x=\"" << px(lx) << "\" y=\"" << px(kTop + 72) << "\" fill=\"red\">o significant after FDR</text>\n";
  out << "</g>\n</svg>\n";
  return out.str();
}

inline void emit_histogram_svg(const GroupHistograms& hist, const ViolationReport& report, double alpha,
                               const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << render_histogram_svg(hist, report, alpha);
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace positivity
