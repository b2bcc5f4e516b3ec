#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace treejog {

// Singular values (descending) and right singular vectors of a dense
// row-major matrix. Rows of `right` are unit vectors for the non-zero
// singular values only; trailing zero values have no vector.
struct RightSvd {
  std::vector<double> singular_values;      // min(rows, cols) entries
  std::vector<std::vector<double>> right;   // rank x cols
};

// One-sided (Hestenes) Jacobi: rotates pairs of rows until they are
// mutually orthogonal. Cost per sweep is rows^2 * cols, which suits the
// few-rows/many-columns shape of language-by-feature data.
RightSvd jacobi_svd(std::span<const double> data, std::size_t rows, std::size_t cols);

}  // namespace treejog
