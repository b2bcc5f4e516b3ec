#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "treejog/jog.hpp"

namespace treejog {

struct GridSpec {
  std::size_t nx = 100;
  std::size_t ny = 100;
  double x0 = 0.0, x1 = 1.0;
  double y0 = 0.0, y1 = 1.0;

  double dx() const { return (x1 - x0) / static_cast<double>(nx); }
  double dy() const { return (y1 - y0) / static_cast<double>(ny); }
  // Densities are evaluated at cell centres.
  double x(std::size_t i) const { return x0 + (static_cast<double>(i) + 0.5) * dx(); }
  double y(std::size_t j) const { return y0 + (static_cast<double>(j) + 0.5) * dy(); }
  void validate() const;
};

struct Bandwidth {
  double hx = 1.0;
  double hy = 1.0;
};

struct DensityGrid {
  GridSpec spec;
  std::vector<double> density;  // row j (y) major: density[j * nx + i]

  double at(std::size_t i, std::size_t j) const { return density[j * spec.nx + i]; }
  double cell_area() const { return spec.dx() * spec.dy(); }
};

// Scott's rule, n^(-1/6) times the sample standard deviation per axis.
// Throws NumericalError when either axis has zero spread.
Bandwidth scott_bandwidth(std::span<const Point2> points);

// Grid covering the points plus `pad` bandwidths on every side.
GridSpec auto_grid(std::span<const Point2> points, const Bandwidth& h, std::size_t nx,
                   std::size_t ny, double pad = 4.0);

// Gaussian product-kernel density estimate on `grid`. With no bandwidth,
// Scott's rule is used.
DensityGrid kde_2d(std::span<const Point2> points, std::optional<Bandwidth> bandwidth,
                   const GridSpec& grid);

// CSV with columns x, y, density; one row per cell, x varying fastest.
void write_density_csv(std::ostream& out, const DensityGrid& grid);

}  // namespace treejog
