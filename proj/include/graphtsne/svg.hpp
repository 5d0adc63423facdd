#pragma once

#include <span>
#include <string>

#include "graphtsne/graph.hpp"
#include "graphtsne/matrix.hpp"

namespace gtsne {

inline constexpr std::size_t kSvgEdgeLimit = 5000;

/// Self-contained SVG scatter plot of the standardized map. Points are
/// colored by label (12-color cycle) or gray when `labels` is empty; edges are
/// drawn as thin segments when the graph has at most kSvgEdgeLimit nodes.
std::string render_svg(const Embedding& y, const Graph& g, std::span<const int> labels);

}  // namespace gtsne
