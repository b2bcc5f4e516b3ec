#include "treejog/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "treejog/errors.hpp"

namespace treejog {

void PlotSpec::validate() const {
  if (width <= 0 || height <= 0) throw InputError("plot size must be positive");
  if (viewport && (!(viewport->x1 > viewport->x0) || !(viewport->y1 > viewport->y0))) {
    throw InputError("plot viewport is degenerate");
  }
}

Viewport auto_viewport(std::span<const Point2> points) {
  if (points.empty()) return {};
  Viewport v{points[0][0], points[0][0], points[0][1], points[0][1]};
  for (const auto& p : points) {
    v.x0 = std::min(v.x0, p[0]);
    v.x1 = std::max(v.x1, p[0]);
    v.y0 = std::min(v.y0, p[1]);
    v.y1 = std::max(v.y1, p[1]);
  }
  auto widen = [](double& lo, double& hi) {
    const double span = hi - lo;
    if (span > 0) {
      lo -= 0.05 * span;
      hi += 0.05 * span;
    } else {
      lo -= 0.5;
      hi += 0.5;
    }
  };
  widen(v.x0, v.x1);
  widen(v.y0, v.y1);
  return v;
}

namespace {

constexpr double kLeft = 64.0;
constexpr double kRight = 16.0;
constexpr double kTop = 16.0;
constexpr double kBottom = 48.0;

std::string num(double v) {
  if (std::abs(v) < 5e-7) v = 0.0;  // no "-0" or 1e-17 noise in the output
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string caption(const std::string& name, const std::optional<double>& share) {
  if (!share) return name;
  char buf[32];
  std::snprintf(buf, sizeof buf, " (%.1f%%)", 100.0 * *share);
  return name + buf;
}

class Canvas {
 public:
  Canvas(const PlotSpec& spec, const Viewport& view) : spec_(spec), view_(view) {
    plot_w_ = spec.width - kLeft - kRight;
    plot_h_ = spec.height - kTop - kBottom;
  }

  double px(double x) const { return kLeft + (x - view_.x0) / (view_.x1 - view_.x0) * plot_w_; }
  double py(double y) const {
    double f = (y - view_.y0) / (view_.y1 - view_.y0);
    return spec_.invert_y ? kTop + f * plot_h_ : kTop + (1.0 - f) * plot_h_;
  }

  void open(std::string& out, const std::string& extra_style) const {
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(spec_.width) +
           "\" height=\"" + std::to_string(spec_.height) + "\" viewBox=\"0 0 " +
           std::to_string(spec_.width) + " " + std::to_string(spec_.height) + "\">\n";
    out += "<style>\n"
           "line{stroke:#555;stroke-width:1}\n"
           "circle{fill:#1f77b4;stroke:#fff;stroke-width:0.5}\n"
           "rect.node{fill:#ff7f0e;stroke:#fff;stroke-width:0.5}\n"
           "text{font-family:sans-serif;font-size:10px;fill:#222}\n"
           "path.frame{fill:none;stroke:#000;stroke-width:1}\n";
    out += extra_style;
    out += "</style>\n";
    out += "<defs><clipPath id=\"plot-area\"><path d=\"M" + num(kLeft) + " " + num(kTop) + "H" +
           num(kLeft + plot_w_) + "V" + num(kTop + plot_h_) + "H" + num(kLeft) + "Z\"/></clipPath></defs>\n";
  }

  void axes(std::string& out) const {
    const double l = kLeft, r = kLeft + plot_w_, t = kTop, b = kTop + plot_h_;
    out += "<path class=\"frame\" d=\"M" + num(l) + " " + num(t) + "H" + num(r) + "V" + num(b) +
           "H" + num(l) + "Z\"/>\n";
    std::string ticks;
    std::string labels;
    constexpr int kTicks = 5;
    for (int i = 0; i < kTicks; ++i) {
      const double f = static_cast<double>(i) / (kTicks - 1);
      const double xv = view_.x0 + f * (view_.x1 - view_.x0);
      const double yv = view_.y0 + f * (view_.y1 - view_.y0);
      const double x = px(xv);
      const double y = py(yv);
      ticks += "M" + num(x) + " " + num(b) + "v4";
      ticks += "M" + num(l) + " " + num(y) + "h-4";
      labels += "<text x=\"" + num(x) + "\" y=\"" + num(b + 15) + "\" text-anchor=\"middle\">" +
                num(xv) + "</text>\n";
      labels += "<text x=\"" + num(l - 6) + "\" y=\"" + num(y + 3) + "\" text-anchor=\"end\">" +
                num(yv) + "</text>\n";
    }
    out += "<path class=\"frame\" d=\"" + ticks + "\"/>\n";
    out += labels;
    out += "<text x=\"" + num(l + plot_w_ / 2) + "\" y=\"" + num(b + 36) +
           "\" text-anchor=\"middle\">" + escape(caption(spec_.x_name, spec_.x_explained)) +
           "</text>\n";
    out += "<text transform=\"translate(" + num(14) + " " + num(t + plot_h_ / 2) +
           ") rotate(-90)\" text-anchor=\"middle\">" +
           escape(caption(spec_.y_name, spec_.y_explained)) + "</text>\n";
  }

 private:
  const PlotSpec& spec_;
  Viewport view_;
  double plot_w_ = 0;
  double plot_h_ = 0;
};

}  // namespace

std::string render_tree(const ProjectedTree& ptree, const PlotSpec& spec) {
  spec.validate();
  const auto& tree = ptree.tree;
  if (ptree.coords.size() != tree.size()) throw InputError("projected tree lacks coordinates");
  const Viewport view = spec.viewport ? *spec.viewport : auto_viewport(ptree.coords);
  Canvas canvas(spec, view);
  auto at = [&](NodeId v) { return ptree.coords[static_cast<std::size_t>(v)]; };

  std::string out;
  canvas.open(out, spec.highlight.empty() ? "" : "circle.highlight{fill:#d62728}\n");
  canvas.axes(out);
  out += "<g clip-path=\"url(#plot-area)\">\n";
  for (NodeId v : tree.preorder()) {
    if (v == tree.root()) continue;
    auto a = at(tree.parent(v));
    auto b = at(v);
    out += "<line x1=\"" + num(canvas.px(a[0])) + "\" y1=\"" + num(canvas.py(a[1])) + "\" x2=\"" +
           num(canvas.px(b[0])) + "\" y2=\"" + num(canvas.py(b[1])) + "\"/>\n";
  }
  constexpr double kHalf = 3.5;
  for (NodeId v : tree.preorder()) {
    auto c = at(v);
    const double x = canvas.px(c[0]);
    const double y = canvas.py(c[1]);
    if (tree.is_leaf(v)) {
      const bool hl = spec.highlight.count(tree.node(v).label) > 0;
      out += std::string("<circle") + (hl ? " class=\"highlight\"" : "") + " cx=\"" + num(x) +
             "\" cy=\"" + num(y) + "\" r=\"4\"/>\n";
    } else {
      out += "<rect class=\"node\" x=\"" + num(x - kHalf) + "\" y=\"" + num(y - kHalf) +
             "\" width=\"" + num(2 * kHalf) + "\" height=\"" + num(2 * kHalf) + "\"/>\n";
    }
  }
  for (NodeId v : tree.preorder()) {
    const bool leaf = tree.is_leaf(v);
    if (spec.labels == LabelMode::none || (spec.labels == LabelMode::leaves && !leaf)) continue;
    auto c = at(v);
    const std::string text = leaf ? tree.node(v).label : "n" + std::to_string(v);
    out += "<text x=\"" + num(canvas.px(c[0]) + 6) + "\" y=\"" + num(canvas.py(c[1]) - 4) + "\">" +
           escape(text) + "</text>\n";
  }
  out += "</g>\n</svg>\n";
  return out;
}

std::string render_kde(const DensityGrid& grid, std::span<const Point2> points,
                       const PlotSpec& spec) {
  spec.validate();
  grid.spec.validate();
  const Viewport view = spec.viewport
                            ? *spec.viewport
                            : Viewport{grid.spec.x0, grid.spec.x1, grid.spec.y0, grid.spec.y1};
  Canvas canvas(spec, view);
  const double peak = grid.density.empty() ? 0.0 : *std::max_element(grid.density.begin(), grid.density.end());

  std::string out;
  canvas.open(out, "circle{fill:#d62728}\n");
  out += "<g clip-path=\"url(#plot-area)\" shape-rendering=\"crispEdges\">\n";
  for (std::size_t j = 0; j < grid.spec.ny; ++j) {
    for (std::size_t i = 0; i < grid.spec.nx; ++i) {
      const double xa = canvas.px(grid.spec.x0 + static_cast<double>(i) * grid.spec.dx());
      const double xb = canvas.px(grid.spec.x0 + static_cast<double>(i + 1) * grid.spec.dx());
      const double ya = canvas.py(grid.spec.y0 + static_cast<double>(j) * grid.spec.dy());
      const double yb = canvas.py(grid.spec.y0 + static_cast<double>(j + 1) * grid.spec.dy());
      const double level = peak > 0 ? grid.at(i, j) / peak : 0.0;
      const int gray = static_cast<int>(std::lround(255.0 * (1.0 - level)));
      char fill[16];
      std::snprintf(fill, sizeof fill, "#%02x%02x%02x", gray, gray, gray);
      out += "<rect x=\"" + num(std::min(xa, xb)) + "\" y=\"" + num(std::min(ya, yb)) +
             "\" width=\"" + num(std::abs(xb - xa)) + "\" height=\"" + num(std::abs(yb - ya)) +
             "\" fill=\"" + fill + "\"/>\n";
    }
  }
  for (const auto& p : points) {
    out += "<circle cx=\"" + num(canvas.px(p[0])) + "\" cy=\"" + num(canvas.py(p[1])) +
           "\" r=\"2\"/>\n";
  }
  out += "</g>\n";
  canvas.axes(out);
  out += "</svg>\n";
  return out;
}

}  // namespace treejog
