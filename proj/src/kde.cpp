#include "treejog/kde.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include "treejog/errors.hpp"

namespace treejog {

void GridSpec::validate() const {
  if (nx == 0 || ny == 0) throw InputError("kde grid needs at least one cell per axis");
  if (!(x1 > x0) || !(y1 > y0)) throw InputError("kde grid bounds are empty or inverted");
}

Bandwidth scott_bandwidth(std::span<const Point2> points) {
  if (points.size() < 2) {
    throw NumericalError("automatic bandwidth needs at least two distinct points; pass a bandwidth");
  }
  const double n = static_cast<double>(points.size());
  Bandwidth h;
  for (std::size_t d = 0; d < 2; ++d) {
    double mean = 0.0;
    for (const auto& p : points) mean += p[d];
    mean /= n;
    double var = 0.0;
    for (const auto& p : points) var += (p[d] - mean) * (p[d] - mean);
    var /= n - 1.0;
    const double sd = std::sqrt(var);
    if (!(sd > 0)) {
      throw NumericalError("all points share one coordinate, so the automatic bandwidth is zero; "
                           "pass a bandwidth");
    }
    (d == 0 ? h.hx : h.hy) = std::pow(n, -1.0 / 6.0) * sd;
  }
  return h;
}

GridSpec auto_grid(std::span<const Point2> points, const Bandwidth& h, std::size_t nx,
                   std::size_t ny, double pad) {
  if (points.empty()) throw InputError("kde needs at least one point");
  GridSpec g;
  g.nx = nx;
  g.ny = ny;
  g.x0 = g.x1 = points.front()[0];
  g.y0 = g.y1 = points.front()[1];
  for (const auto& p : points) {
    g.x0 = std::min(g.x0, p[0]);
    g.x1 = std::max(g.x1, p[0]);
    g.y0 = std::min(g.y0, p[1]);
    g.y1 = std::max(g.y1, p[1]);
  }
  g.x0 -= pad * h.hx;
  g.x1 += pad * h.hx;
  g.y0 -= pad * h.hy;
  g.y1 += pad * h.hy;
  return g;
}

DensityGrid kde_2d(std::span<const Point2> points, std::optional<Bandwidth> bandwidth,
                   const GridSpec& grid) {
  if (points.empty()) throw InputError("kde needs at least one point");
  grid.validate();
  const Bandwidth h = bandwidth ? *bandwidth : scott_bandwidth(points);
  if (!(h.hx > 0) || !(h.hy > 0)) throw InputError("kde bandwidth must be positive");

  // Separable kernel: per-point factors along x and y, then outer sums.
  const std::size_t n = points.size();
  std::vector<double> kx(n * grid.nx);
  std::vector<double> ky(n * grid.ny);
  const double cx = 1.0 / (h.hx * std::sqrt(2.0 * std::numbers::pi));
  const double cy = 1.0 / (h.hy * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < grid.nx; ++i) {
      const double z = (grid.x(i) - points[k][0]) / h.hx;
      kx[k * grid.nx + i] = cx * std::exp(-0.5 * z * z);
    }
    for (std::size_t j = 0; j < grid.ny; ++j) {
      const double z = (grid.y(j) - points[k][1]) / h.hy;
      ky[k * grid.ny + j] = cy * std::exp(-0.5 * z * z);
    }
  }
  DensityGrid out{grid, std::vector<double>(grid.nx * grid.ny, 0.0)};
  for (std::size_t j = 0; j < grid.ny; ++j) {
    for (std::size_t i = 0; i < grid.nx; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += kx[k * grid.nx + i] * ky[k * grid.ny + j];
      out.density[j * grid.nx + i] = s / static_cast<double>(n);
    }
  }
  return out;
}

void write_density_csv(std::ostream& out, const DensityGrid& grid) {
  out << "x,y,density\n";
  char buf[96];
  for (std::size_t j = 0; j < grid.spec.ny; ++j) {
    for (std::size_t i = 0; i < grid.spec.nx; ++i) {
      std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g\n", grid.spec.x(i), grid.spec.y(j),
                    grid.at(i, j));
      out << buf;
    }
  }
}

}  // namespace treejog
