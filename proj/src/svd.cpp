#include "treejog/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "treejog/errors.hpp"

namespace treejog {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace

RightSvd jacobi_svd(std::span<const double> data, std::size_t rows, std::size_t cols) {
  if (data.size() != rows * cols) throw InputError("svd: data size does not match shape");
  std::vector<std::vector<double>> w(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    w[i].assign(data.begin() + static_cast<std::ptrdiff_t>(i * cols),
                data.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols));
  }

  constexpr double eps = 1e-15;
  constexpr int max_sweeps = 80;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t i = 0; i + 1 < rows; ++i) {
      for (std::size_t j = i + 1; j < rows; ++j) {
        const double a = dot(w[i], w[i]);
        const double b = dot(w[j], w[j]);
        const double c = dot(w[i], w[j]);
        if (a == 0.0 || b == 0.0 || std::abs(c) <= eps * std::sqrt(a * b)) continue;
        rotated = true;
        const double zeta = (b - a) / (2.0 * c);
        const double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = cs * t;
        for (std::size_t k = 0; k < cols; ++k) {
          const double xi = w[i][k];
          const double xj = w[j][k];
          w[i][k] = cs * xi - sn * xj;
          w[j][k] = sn * xi + cs * xj;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> norms(rows);
  for (std::size_t i = 0; i < rows; ++i) norms[i] = std::sqrt(dot(w[i], w[i]));
  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

  RightSvd out;
  const std::size_t rank_cap = std::min(rows, cols);
  const double top = rows > 0 ? norms[order[0]] : 0.0;
  // Values at rounding level relative to the largest are exact zeros.
  const double cutoff = top * 1e-13 * static_cast<double>(std::max(rows, cols));
  for (std::size_t r = 0; r < rank_cap; ++r) {
    const std::size_t i = order[r];
    if (norms[i] <= cutoff || norms[i] == 0.0) {
      out.singular_values.push_back(0.0);
      continue;
    }
    out.singular_values.push_back(norms[i]);
    std::vector<double> v = w[i];
    for (double& x : v) x /= norms[i];
    out.right.push_back(std::move(v));
  }
  return out;
}

}  // namespace treejog
