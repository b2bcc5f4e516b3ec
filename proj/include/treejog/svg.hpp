#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>

#include "treejog/jog.hpp"
#include "treejog/kde.hpp"

namespace treejog {

enum class LabelMode { all, leaves, none };

struct Viewport {
  double x0 = 0.0, x1 = 1.0;
  double y0 = 0.0, y1 = 1.0;
};

struct PlotSpec {
  int width = 640;
  int height = 520;
  std::optional<Viewport> viewport;  // data bounds + 5% margin when unset
  LabelMode labels = LabelMode::leaves;
  std::set<std::string> highlight;  // leaf labels
  std::string x_name = "PC1";
  std::string y_name = "PC2";
  // Variance shares in [0, 1]; rendered as "PC1 (xx.x%)".
  std::optional<double> x_explained;
  std::optional<double> y_explained;
  bool invert_y = false;

  void validate() const;
};

// Bounds of the points widened by 5% per side; a zero-width axis is widened
// by 0.5 on each side.
Viewport auto_viewport(std::span<const Point2> points);

// Standalone SVG: parent-child edges as <line>, leaves as <circle>,
// internal nodes as <rect>. Frame and ticks use <path> only. Numbers are
// printed with 6 significant digits, so output is byte-stable.
std::string render_tree(const ProjectedTree& ptree, const PlotSpec& spec);

// Grayscale density cells (<rect>, darker = denser) with the sample points
// overlaid as <circle>. The viewport defaults to the grid bounds.
std::string render_kde(const DensityGrid& grid, std::span<const Point2> points,
                       const PlotSpec& spec);

}  // namespace treejog
