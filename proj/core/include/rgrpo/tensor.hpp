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

#ifndef RGRPO_TENSOR_HPP_
#define RGRPO_TENSOR_HPP_

#include <cstddef>
#include <span>
#include <vector>

namespace rgrpo {

// Row-major dense matrix of 64-bit floats. All training state is double
// precision; the finite-difference gates in the test suite depend on it.
struct Tensor2 {
  int rows{0};
  int cols{0};
  std::vector<double> data;

  Tensor2() = default;
  Tensor2(int r, int c)
      : rows(r), cols(c),
        data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0.0) {}

  double& at(int r, int c) {
    return data[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) +
                static_cast<std::size_t>(c)];
  }
  double at(int r, int c) const {
    return data[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) +
                static_cast<std::size_t>(c)];
  }

  std::span<double> row(int r) {
    return {data.data() +
                static_cast<std::size_t>(r) * static_cast<std::size_t>(cols),
            static_cast<std::size_t>(cols)};
  }
  std::span<const double> row(int r) const {
    return {data.data() +
                static_cast<std::size_t>(r) * static_cast<std::size_t>(cols),
            static_cast<std::size_t>(cols)};
  }

  bool same_shape(const Tensor2& o) const {
    return rows == o.rows && cols == o.cols;
  }
  std::size_t size() const { return data.size(); }
  void fill(double v) { data.assign(data.size(), v); }
};

Tensor2 matmul(const Tensor2& a, const Tensor2& b);

// Each row divided by max(||row||, eps); near-zero rows map to zero safely.
Tensor2 l2_normalize_rows(const Tensor2& x, double eps);
void l2_normalize_rows_inplace(Tensor2& x, double eps);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

bool all_finite(const Tensor2& x);
double max_abs_diff(const Tensor2& a, const Tensor2& b);

}  // namespace rgrpo

#endif  // RGRPO_TENSOR_HPP_
