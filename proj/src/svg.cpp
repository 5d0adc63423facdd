#include "graphtsne/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "graphtsne/metrics.hpp"

namespace gtsne {

namespace {

constexpr const char* kPalette[12] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                      "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                      "#bcbd22", "#17becf", "#393b79", "#ad494a"};
constexpr double kCanvas = 800.0;
constexpr double kMargin = 0.05;

}  // namespace

std::string render_svg(const Embedding& y, const Graph& g, std::span<const int> labels) {
  const Embedding s = standardize(y);
  const std::size_t n = s.rows();
  double min_x = 0, max_x = 0, min_y = 0, max_y = 0;
  if (n > 0) {
    min_x = min_y = std::numeric_limits<double>::infinity();
    max_x = max_y = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      min_x = std::min(min_x, s(i, 0));
      max_x = std::max(max_x, s(i, 0));
      min_y = std::min(min_y, s(i, 1));
      max_y = std::max(max_y, s(i, 1));
    }
  }
  const double span = std::max({max_x - min_x, max_y - min_y, 1e-12});
  const double inner = kCanvas * (1.0 - 2.0 * kMargin);
  const double scale = inner / span;
  const double off_x = kCanvas * kMargin + (inner - (max_x - min_x) * scale) / 2.0;
  const double off_y = kCanvas * kMargin + (inner - (max_y - min_y) * scale) / 2.0;
  auto px = [&](std::size_t i) { return off_x + (s(i, 0) - min_x) * scale; };
  // SVG y grows downward.
  auto py = [&](std::size_t i) { return kCanvas - (off_y + (s(i, 1) - min_y) * scale); };
  const double radius = std::max(1.0, 40.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(n, 1))));

  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
                "viewBox=\"0 0 %.0f %.0f\">\n",
                kCanvas, kCanvas, kCanvas, kCanvas);
  out += buf;
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (n <= kSvgEdgeLimit && g.num_nodes() == n && g.num_edges() > 0) {
    out += "<g stroke=\"#999999\" stroke-opacity=\"0.4\" stroke-width=\"0.3\">\n";
    for (auto [a, b] : g.edges()) {
      std::snprintf(buf, sizeof buf, "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\"/>\n",
                    px(a), py(a), px(b), py(b));
      out += buf;
    }
    out += "</g>\n";
  }
  out += "<g stroke=\"none\">\n";
  for (std::size_t i = 0; i < n; ++i) {
    const char* color = labels.size() == n ? kPalette[static_cast<std::size_t>(labels[i]) % 12] : "#808080";
    std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"%.2f\" fill=\"%s\"/>\n", px(i),
                  py(i), radius, color);
    out += buf;
  }
  out += "</g>\n</svg>\n";
  return out;
}

}  // namespace gtsne
