#ifndef G4D_TENSOR_HPP_
#define G4D_TENSOR_HPP_

#include <cassert>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace g4d {

// Dense row-major tensor of doubles. Checkpoints store float32; everything
// in memory is double.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(numel_of(shape), 0.0);
  }

  static size_t numel_of(const std::vector<int>& s) {
    size_t n = 1;
    for (int d : s) {
      if (d < 0) throw std::invalid_argument("negative tensor dim");
      n *= static_cast<size_t>(d);
    }
    return n;
  }

  size_t numel() const { return data.size(); }

  double& operator[](size_t i) { return data[i]; }
  double operator[](size_t i) const { return data[i]; }

  // 2D access for weight matrices, shape {rows, cols}.
  double& at(int r, int c) { return data[static_cast<size_t>(r) * shape[1] + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * shape[1] + c]; }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

inline std::vector<double> matvec(const Tensor& W, const std::vector<double>& x) {
  assert(W.shape.size() == 2 && static_cast<size_t>(W.shape[1]) == x.size());
  std::vector<double> y(W.shape[0], 0.0);
  const int rows = W.shape[0], cols = W.shape[1];
  for (int r = 0; r < rows; ++r) {
    const double* wrow = &W.data[static_cast<size_t>(r) * cols];
    double acc = 0.0;
    for (int c = 0; c < cols; ++c) acc += wrow[c] * x[c];
    y[r] = acc;
  }
  return y;
}

}  // namespace g4d

#endif
