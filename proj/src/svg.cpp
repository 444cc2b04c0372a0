#include "anonrisk/svg.hpp"

#include <algorithm>
#include <sstream>

#include "anonrisk/util.hpp"

namespace anonrisk::svg {

namespace {

constexpr int kWidth = 760;
constexpr int kHeight = 420;
constexpr int kMarginLeft = 60;
constexpr int kMarginBottom = 60;
constexpr int kMarginTop = 40;
constexpr int kMarginRight = 20;

const char* kPalette[] = {"#4c78a8", "#f58518", "#54a24b", "#e45756",
                          "#72b7b2", "#b279a2"};

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

void open_svg(std::ostringstream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"16\">" << escape(title) << "</text>\n";
}

}  // namespace

void write_bar_chart(const std::filesystem::path& path, const std::string& title,
                     const std::vector<Bar>& bars) {
  std::ostringstream out;
  open_svg(out, title);

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  double max_value = 1.0;
  for (const auto& bar : bars) max_value = std::max(max_value, bar.value);

  const double slot = bars.empty() ? plot_w : plot_w / static_cast<double>(bars.size());
  const double bar_w = slot * 0.7;
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double h = plot_h * bars[i].value / max_value;
    const double x = kMarginLeft + slot * static_cast<double>(i) + (slot - bar_w) / 2;
    const double y = kMarginTop + plot_h - h;
    out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << bar_w << "\" height=\""
        << h << "\" fill=\"" << kPalette[i % 6] << "\"/>\n";
    out << "<text x=\"" << x + bar_w / 2 << "\" y=\"" << kHeight - kMarginBottom + 16
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\" "
        << "transform=\"rotate(30 " << x + bar_w / 2 << ' ' << kHeight - kMarginBottom + 16
        << ")\">" << escape(bars[i].label) << "</text>\n";
    out << "<text x=\"" << x + bar_w / 2 << "\" y=\"" << y - 4
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
        << bars[i].value << "</text>\n";
  }
  out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop + plot_h << "\" x2=\""
      << kWidth - kMarginRight << "\" y2=\"" << kMarginTop + plot_h
      << "\" stroke=\"black\"/>\n";
  out << "</svg>\n";
  util::write_text_file_atomic(path, out.str());
}

void write_cdf_chart(const std::filesystem::path& path, const std::string& title,
                     const std::vector<Series>& series) {
  std::ostringstream out;
  open_svg(out, title);

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  auto sx = [&](double x) { return kMarginLeft + x * plot_w; };
  auto sy = [&](double y) { return kMarginTop + plot_h * (1.0 - y); };

  // axes with a light grid at 0.25 steps
  for (int i = 0; i <= 4; ++i) {
    double frac = i / 4.0;
    out << "<line x1=\"" << sx(0) << "\" y1=\"" << sy(frac) << "\" x2=\"" << sx(1)
        << "\" y2=\"" << sy(frac) << "\" stroke=\"#dddddd\"/>\n";
    out << "<text x=\"" << sx(0) - 8 << "\" y=\"" << sy(frac) + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << frac
        << "</text>\n";
    out << "<text x=\"" << sx(frac) << "\" y=\"" << sy(0) + 16
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << frac
        << "</text>\n";
  }

  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& points = series[s].points;
    if (points.empty()) continue;
    out << "<path fill=\"none\" stroke=\"" << kPalette[s % 6] << "\" stroke-width=\"1.5\" d=\"";
    double prev_y = 0.0;
    out << "M" << sx(std::max(0.0, points.front().first)) << ' ' << sy(0.0);
    for (const auto& [x, y] : points) {
      double cx = std::clamp(x, 0.0, 1.0);
      out << " L" << sx(cx) << ' ' << sy(prev_y) << " L" << sx(cx) << ' ' << sy(y);
      prev_y = y;
    }
    out << " L" << sx(1.0) << ' ' << sy(prev_y);
    out << "\"/>\n";
    out << "<text x=\"" << kMarginLeft + 10 << "\" y=\"" << kMarginTop + 14 * (s + 1)
        << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << kPalette[s % 6]
        << "\">" << escape(series[s].name) << "</text>\n";
  }
  out << "</svg>\n";
  util::write_text_file_atomic(path, out.str());
}

}  // namespace anonrisk::svg
