#include "hsicnet/hsic.hpp"

#include <algorithm>
#include <cmath>

#include "hsicnet/error.hpp"

namespace hsicnet::hsic {

namespace {
double squared_distance(const double* a, const double* b, std::size_t d) {
  double acc = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    double diff = a[k] - b[k];
    acc += diff * diff;
  }
  return acc;
}

// Double centering: M = H K H with H = I - (1/n) J.
Matrix center(const Matrix& k) {
  std::size_t n = k.rows;
  std::vector<double> row_mean(n, 0.0), col_mean(n, 0.0);
  double grand = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      row_mean[i] += k.at(i, j);
      col_mean[j] += k.at(i, j);
      grand += k.at(i, j);
    }
  for (auto& v : row_mean) v /= static_cast<double>(n);
  for (auto& v : col_mean) v /= static_cast<double>(n);
  grand /= static_cast<double>(n * n);
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      m.at(i, j) = k.at(i, j) - row_mean[i] - col_mean[j] + grand;
  return m;
}

Matrix kernel_from_rows(const double* data, std::size_t n, std::size_t d,
                        double sigma) {
  Matrix k(n, n);
  double inv = 1.0 / (sigma * sigma);
  for (std::size_t i = 0; i < n; ++i) {
    k.at(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double v = std::exp(-squared_distance(data + i * d, data + j * d, d) * inv);
      k.at(i, j) = v;
      k.at(j, i) = v;
    }
  }
  return k;
}
}  // namespace

Matrix gaussian_kernel_matrix(const Matrix& x, double sigma) {
  if (sigma <= 0.0)
    fail(ErrorKind::invalid_argument, "gaussian_kernel_matrix: sigma must be > 0");
  if (x.rows == 0 || x.cols == 0)
    fail(ErrorKind::invalid_argument, "gaussian_kernel_matrix: empty input");
  return kernel_from_rows(x.data.data(), x.rows, x.cols, sigma);
}

double median_heuristic(const Matrix& x, double min_bandwidth) {
  if (x.rows < 2)
    fail(ErrorKind::invalid_argument, "median_heuristic: need at least 2 rows");
  std::vector<double> dists;
  dists.reserve(x.rows * (x.rows - 1) / 2);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = i + 1; j < x.rows; ++j)
      dists.push_back(std::sqrt(squared_distance(x.row(i), x.row(j), x.cols)));
  std::sort(dists.begin(), dists.end());
  std::size_t m = dists.size();
  double med = m % 2 == 1 ? dists[m / 2] : 0.5 * (dists[m / 2 - 1] + dists[m / 2]);
  return std::max(med, min_bandwidth);
}

double update_bandwidth(double sigma_prev, double sigma_batch,
                        const KernelConfig& cfg) {
  double next = cfg.momentum * sigma_prev + (1.0 - cfg.momentum) * sigma_batch;
  return std::max(next, cfg.min_bandwidth);
}

double hsic_statistic(const Matrix& f, const Matrix& g, double sigma_f,
                      double sigma_g) {
  if (f.rows != g.rows)
    fail(ErrorKind::invalid_argument, "hsic_statistic: row count mismatch");
  if (f.rows < 2)
    fail(ErrorKind::invalid_argument, "hsic_statistic: need at least 2 rows");
  Matrix k = gaussian_kernel_matrix(f, sigma_f);
  Matrix l = gaussian_kernel_matrix(g, sigma_g);
  Matrix m = center(k);
  double trace = 0.0;
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) trace += m.at(i, j) * l.at(j, i);
  double n1 = static_cast<double>(f.rows - 1);
  return std::max(trace / (n1 * n1), 0.0);
}

nn::Tensor hsic_penalty(const nn::Tensor& g, const Matrix& f, double sigma_f,
                        double sigma_g) {
  if (!g.defined() || g.shape().size() != 2)
    fail(ErrorKind::invalid_argument, "hsic_penalty: g must be {n, d}");
  std::size_t n = g.dim(0), d = g.dim(1);
  if (f.rows != n)
    fail(ErrorKind::invalid_argument, "hsic_penalty: row count mismatch");
  if (n < 2)
    fail(ErrorKind::invalid_argument, "hsic_penalty: need at least 2 rows");
  if (sigma_g <= 0.0)
    fail(ErrorKind::invalid_argument, "hsic_penalty: sigma_g must be > 0");

  Matrix m = center(gaussian_kernel_matrix(f, sigma_f));
  Matrix l = kernel_from_rows(g.data(), n, d, sigma_g);

  // W = (H K H) o L drives both the value and the gradient.
  Matrix w(n, n);
  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      w.at(i, j) = m.at(i, j) * l.at(i, j);
      trace += w.at(i, j);
    }
  double n1 = static_cast<double>(n - 1);
  double c = 1.0 / (n1 * n1);

  auto out = nn::Tensor::from({1}, {trace * c}, g.requires_grad());
  if (!g.requires_grad()) return out;
  auto node = out.node();
  node->parents = {g.node()};
  node->backward_fn = [n, d, c, sigma_g, w = std::move(w)](nn::Node& self) {
    nn::Node& pg = *self.parents[0];
    pg.ensure_grad();
    double coef = self.grad[0] * (-4.0 * c) / (sigma_g * sigma_g);
    for (std::size_t a = 0; a < n; ++a) {
      double row_sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) row_sum += w.at(a, j);
      for (std::size_t k = 0; k < d; ++k) {
        double acc = row_sum * pg.value[a * d + k];
        for (std::size_t j = 0; j < n; ++j)
          acc -= w.at(a, j) * pg.value[j * d + k];
        pg.grad[a * d + k] += coef * acc;
      }
    }
  };
  return out;
}

}  // namespace hsicnet::hsic
