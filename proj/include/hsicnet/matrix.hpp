#pragma once

#include <cstddef>
#include <vector>

namespace hsicnet {

// Minimal row-major matrix used at module boundaries (kernel statistics,
// latent/feature batches). Heavy math maps this into Eigen internally.
struct Matrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> data;  // rows * cols, row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double* row(std::size_t r) { return data.data() + r * cols; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

}  // namespace hsicnet
