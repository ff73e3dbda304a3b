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

#include "rgrpo/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rgrpo/errors.hpp"
#include "rgrpo/rng.hpp"

namespace rgrpo {

double finite_diff_check(const std::function<double(const Tensor2&)>& loss_fn,
                         const Tensor2& params, const Tensor2& analytic_grads,
                         double h, int probes, std::uint64_t seed) {
  if (h <= 0.0) throw DomainError("finite_diff_check: h must be positive");
  if (probes < 1) throw DomainError("finite_diff_check: probes must be >= 1");
  if (!params.same_shape(analytic_grads)) {
    throw DimensionError("finite_diff_check: gradient shape mismatch");
  }
  const auto total = static_cast<int>(params.size());
  Rng rng(seed);
  std::vector<int> coords;
  if (probes >= total) {
    coords.resize(static_cast<std::size_t>(total));
    for (int i = 0; i < total; ++i) coords[static_cast<std::size_t>(i)] = i;
  } else {
    coords = rng.sample_without_replacement(total, probes);
  }

  Tensor2 perturbed = params;
  double max_rel = 0.0;
  for (int c : coords) {
    const auto idx = static_cast<std::size_t>(c);
    const double original = perturbed.data[idx];
    perturbed.data[idx] = original + h;
    const double up = loss_fn(perturbed);
    perturbed.data[idx] = original - h;
    const double down = loss_fn(perturbed);
    perturbed.data[idx] = original;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_diff_check: non-finite loss at coordinate " +
                         std::to_string(c));
    }
    const double fd = (up - down) / (2.0 * h);
    const double an = analytic_grads.data[idx];
    const double rel =
        std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8});
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

}  // namespace rgrpo
