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

#ifndef RGRPO_OPTIM_HPP_
#define RGRPO_OPTIM_HPP_

#include <cstdint>

#include "rgrpo/tensor.hpp"

namespace rgrpo {

struct AdamWConfig {
  double beta1{0.9};
  double beta2{0.95};
  double eps{1e-8};
  double weight_decay{0.0};  // decoupled, off by default
};

// One state per parameter tensor; `step` counts completed updates.
struct AdamWState {
  Tensor2 m;
  Tensor2 v;
  std::int64_t step{0};
  AdamWConfig cfg;

  AdamWState(int rows, int cols, const AdamWConfig& c)
      : m(rows, cols), v(rows, cols), cfg(c) {}
};

// Bias-corrected AdamW update with decoupled weight decay.
void adamw_step(Tensor2& params, const Tensor2& grads, AdamWState& state,
                double lr);

// Linear warmup to base_lr, then cosine decay to floor_lr.
struct LrSchedule {
  double base_lr{1e-3};
  double warmup_ratio{0.05};
  std::int64_t total_steps{1};
  double floor_lr{0.0};
};

double lr_at(const LrSchedule& schedule, std::int64_t step);

}  // namespace rgrpo

#endif  // RGRPO_OPTIM_HPP_
