#include "roomloc/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "roomloc/io.hpp"

namespace roomloc::svg {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 360.0;
constexpr double kLeft = 60.0;
constexpr double kRight = 130.0;
constexpr double kTop = 36.0;
constexpr double kBottom = 48.0;
const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string num(double v) {
  // Two decimals keep the markup small and stable across platforms.
  return io::format_double(std::round(v * 100.0) / 100.0);
}

}  // namespace

std::string line_chart(const std::string& title, const std::vector<std::string>& x_labels,
                       const std::vector<Series>& series, const std::string& y_label) {
  std::size_t n = x_labels.size();
  double lo = 0.0;
  double hi = 0.0;
  bool any = false;
  for (const auto& s : series) {
    n = std::max(n, s.y.size());
    for (double v : s.y) {
      if (!std::isfinite(v)) continue;
      lo = any ? std::min(lo, v) : v;
      hi = any ? std::max(hi, v) : v;
      any = true;
    }
  }
  lo = std::min(lo, 0.0);
  if (hi <= lo) hi = lo + 1.0;
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](std::size_t i) { return kLeft + (n > 1 ? pw * static_cast<double>(i) / static_cast<double>(n - 1) : pw / 2); };
  auto py = [&](double v) { return kTop + ph * (1.0 - (v - lo) / (hi - lo)); };

  std::ostringstream o;
  o << R"(<svg xmlns="http://www.w3.org/2000/svg" width=")" << kWidth << R"(" height=")" << kHeight
    << R"(" font-family="sans-serif" font-size="11">)" << "\n";
  o << R"(<rect width="100%" height="100%" fill="white"/>)" << "\n";
  o << R"(<text x=")" << kWidth / 2 << R"(" y="20" text-anchor="middle" font-size="14">)" << escape(title) << "</text>\n";
  o << R"(<line x1=")" << kLeft << R"(" y1=")" << kTop + ph << R"(" x2=")" << kLeft + pw << R"(" y2=")" << kTop + ph
    << R"(" stroke="black"/>)" << "\n";
  o << R"(<line x1=")" << kLeft << R"(" y1=")" << kTop << R"(" x2=")" << kLeft << R"(" y2=")" << kTop + ph
    << R"(" stroke="black"/>)" << "\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = lo + (hi - lo) * k / 4.0;
    o << R"(<text x=")" << kLeft - 6 << R"(" y=")" << num(py(v) + 4) << R"(" text-anchor="end">)" << num(v)
      << "</text>\n";
  }
  o << "<text x=\"14\" y=\"" << kTop + ph / 2 << "\" transform=\"rotate(-90 14 " << kTop + ph / 2
    << ")\" text-anchor=\"middle\">" << escape(y_label) << "</text>\n";
  const std::size_t step = std::max<std::size_t>(1, x_labels.size() / 12);
  for (std::size_t i = 0; i < x_labels.size(); i += step) {
    o << R"(<text x=")" << num(px(i)) << R"(" y=")" << kTop + ph + 16 << R"(" text-anchor="middle">)"
      << escape(x_labels[i]) << "</text>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* colour = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
    std::string path;
    bool pen = false;
    for (std::size_t i = 0; i < series[s].y.size(); ++i) {
      const double v = series[s].y[i];
      if (!std::isfinite(v)) {
        pen = false;
        continue;
      }
      path += (pen ? " L" : " M") + num(px(i)) + " " + num(py(v));
      pen = true;
      o << R"(<circle cx=")" << num(px(i)) << R"(" cy=")" << num(py(v)) << R"(" r="2.5" fill=")" << colour
        << R"("/>)" << "\n";
    }
    if (!path.empty())
      o << R"(<path d=")" << path.substr(1) << R"(" fill="none" stroke=")" << colour << R"(" stroke-width="1.5"/>)"
        << "\n";
    const double ly = kTop + 14.0 * static_cast<double>(s);
    o << R"(<rect x=")" << kLeft + pw + 12 << R"(" y=")" << ly << R"(" width="10" height="10" fill=")" << colour
      << R"("/>)" << "\n";
    o << R"(<text x=")" << kLeft + pw + 26 << R"(" y=")" << ly + 9 << R"(">)" << escape(series[s].name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace roomloc::svg
