#pragma once

#include "carmine/rules.hpp"
#include "carmine/som.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace carmine {

/// Piecewise-linear RGB gradient over [0, 1].
struct ColorScale {
  struct Anchor {
    double t;
    int r, g, b;
  };
  std::vector<Anchor> anchors;  // ascending t, covering 0 and 1
  bool reversed = false;

  std::array<int, 3> rgb(double t) const;
  std::string css(double t) const;  // "#rrggbb"

  static ColorScale blue_red();    // low -> blue, high -> red
  static ColorScale white_dark();  // low -> white, high -> near black
};

struct NodeMapStyle {
  double cell = 96;
  double margin = 48;
  double label_font = 8.5;
  int label_lines = 9;  // stacked labels per column inside a cell
};

// One rectangle per node, node 1 bottom-left through node rows*cols
// top-right, filled from min-max-normalized values (constant maps degenerate
// to the midpoint). Overlay labels are drawn inside their node's cell.
std::string render_node_map(const Eigen::VectorXd& values, int rows, int cols,
                            const ColorScale& scale, const MapOverlay* overlay,
                            const std::string& title, const NodeMapStyle& style = {});

struct HistogramStyle {
  double bar_width = 46;
  double gap = 22;
  double height = 240;
  double margin = 46;
};

// Bars in the given order with heights proportional to counts; an empty input
// renders the axes only.
std::string render_histogram(const std::vector<std::pair<std::string, std::int64_t>>& bars,
                             const std::string& title, const HistogramStyle& style = {});

struct RuleGraphStyle {
  double width = 940;
  double height = 940;
  double item_radius = 11;
  double rule_radius_min = 9;
  double rule_radius_max = 30;
};

// Items on the outer ring (alphabetical), rule circles on the inner ring in
// list order. Rule radius is affine in the dense rank of lift; fill intensity
// follows min-max-normalized confidence.
std::string render_rule_graph(const std::vector<ClassRule>& rules,
                              const ItemDictionary& dictionary, const std::string& title,
                              const RuleGraphStyle& style = {});

}  // namespace carmine
