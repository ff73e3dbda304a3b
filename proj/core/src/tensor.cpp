// Copyright 2026 The rgrpo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rgrpo/tensor.hpp"

#include <cmath>
#include <string>

#include "rgrpo/errors.hpp"

namespace rgrpo {

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
  if (a.cols != b.rows) {
    throw DimensionError("matmul: " + std::to_string(a.rows) + "x" +
                         std::to_string(a.cols) + " * " +
                         std::to_string(b.rows) + "x" + std::to_string(b.cols));
  }
  Tensor2 out(a.rows, b.cols);
  // ikj order keeps the inner loop contiguous in b and out.
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.data.data() + static_cast<std::size_t>(i) * a.cols;
    double* orow = out.data.data() + static_cast<std::size_t>(i) * b.cols;
    for (int k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow =
          b.data.data() + static_cast<std::size_t>(k) * b.cols;
      for (int j = 0; j < b.cols; ++j) {
        orow[j] += aik * brow[j];
      }
    }
  }
  return out;
}

Tensor2 l2_normalize_rows(const Tensor2& x, double eps) {
  Tensor2 out = x;
  l2_normalize_rows_inplace(out, eps);
  return out;
}

void l2_normalize_rows_inplace(Tensor2& x, double eps) {
  for (int i = 0; i < x.rows; ++i) {
    auto r = x.row(i);
    double ss = 0.0;
    for (double v : r) ss += v * v;
    const double inv = 1.0 / std::max(std::sqrt(ss), eps);
    for (double& v : r) v *= inv;
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

bool all_finite(const Tensor2& x) {
  for (double v : x.data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double max_abs_diff(const Tensor2& a, const Tensor2& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    m = std::max(m, std::abs(a.data[i] - b.data[i]));
  }
  return m;
}

}  // namespace rgrpo
