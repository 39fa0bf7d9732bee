#include "condmv/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace condmv {

namespace {

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

bool write_svg_plot(const std::filesystem::path& path, const PlotSpec& spec, const std::vector<PlotSeries>& series) {
  try {
    auto tx = [&](double v) { return spec.log_x ? std::log10(v) : v; };
    auto ty = [&](double v) { return spec.log_y ? std::log10(v) : v; };
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series) {
      for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
        const double e = i < s.error.size() ? s.error[i] : 0.0;
        const double X = tx(s.x[i]), lo = ty(s.y[i] - e > 0 || !spec.log_y ? s.y[i] - e : s.y[i]),
                     hi = ty(s.y[i] + e);
        if (!std::isfinite(X) || !std::isfinite(lo) || !std::isfinite(hi)) continue;
        x0 = std::min(x0, X);
        x1 = std::max(x1, X);
        y0 = std::min(y0, lo);
        y1 = std::max(y1, hi);
      }
    }
    if (!(x1 >= x0) || !(y1 >= y0)) return false;
    if (x1 == x0) x1 = x0 + 1.0;
    if (y1 == y0) y1 = y0 + 1.0;
    const double W = 640, H = 420, L = 70, R = 20, T = 40, B = 60;
    auto px = [&](double X) { return L + (X - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double Y) { return H - B - (Y - y0) / (y1 - y0) * (H - T - B); };

    std::FILE* f = std::fopen(path.string().c_str(), "w");
    if (!f) return false;
    std::fprintf(f, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" font-family=\"sans-serif\">\n",
                 W, H);
    std::fprintf(f, "<rect width=\"100%%\" height=\"100%%\" fill=\"white\"/>\n");
    std::fprintf(f, "<text x=\"%g\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">%s</text>\n", W / 2,
                 escape(spec.title).c_str());
    std::fprintf(f, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", L, H - B, W - R, H - B);
    std::fprintf(f, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", L, T, L, H - B);
    for (int t = 0; t <= 4; ++t) {
      const double X = x0 + (x1 - x0) * t / 4.0, Y = y0 + (y1 - y0) * t / 4.0;
      std::fprintf(f, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\" font-size=\"11\">%.3g</text>\n", px(X),
                   H - B + 16, spec.log_x ? std::pow(10.0, X) : X);
      std::fprintf(f, "<text x=\"%g\" y=\"%g\" text-anchor=\"end\" font-size=\"11\">%.3g</text>\n", L - 6, py(Y) + 4,
                   spec.log_y ? std::pow(10.0, Y) : Y);
    }
    std::fprintf(f, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\" font-size=\"13\">%s</text>\n", (L + W - R) / 2,
                 H - 18, escape(spec.x_label).c_str());
    std::fprintf(f, "<text transform=\"translate(18,%g) rotate(-90)\" text-anchor=\"middle\" font-size=\"13\">%s</text>\n",
                 (T + H - B) / 2, escape(spec.y_label).c_str());
    for (std::size_t k = 0; k < series.size(); ++k) {
      const auto& s = series[k];
      const char* color = kColors[k % 6];
      std::string points;
      char buf[64];
      for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
        const double X = tx(s.x[i]), Y = ty(s.y[i]);
        if (!std::isfinite(X) || !std::isfinite(Y)) continue;
        std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(X), py(Y));
        points += buf;
        std::fprintf(f, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"%s\"/>\n", px(X), py(Y), color);
        if (i < s.error.size() && s.error[i] > 0) {
          const double lo = ty(std::max(s.y[i] - s.error[i], spec.log_y ? s.y[i] * 1e-3 : -1e300));
          const double hi = ty(s.y[i] + s.error[i]);
          std::fprintf(f, "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"%s\"/>\n", px(X), py(lo),
                       px(X), py(hi), color);
        }
      }
      std::fprintf(f, "<polyline fill=\"none\" stroke=\"%s\" stroke-width=\"1.5\" points=\"%s\"/>\n", color,
                   points.c_str());
      std::fprintf(f, "<text x=\"%g\" y=\"%g\" font-size=\"12\" fill=\"%s\">%s</text>\n", W - R - 150,
                   T + 16.0 * (k + 1), color, escape(s.label).c_str());
    }
    std::fprintf(f, "</svg>\n");
    return std::fclose(f) == 0;
  } catch (...) {
    return false;
  }
}

}  // namespace condmv
