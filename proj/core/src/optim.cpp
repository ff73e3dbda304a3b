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

#include "rgrpo/optim.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "rgrpo/errors.hpp"

namespace rgrpo {

void adamw_step(Tensor2& params, const Tensor2& grads, AdamWState& state,
                double lr) {
  if (!params.same_shape(grads) || !params.same_shape(state.m)) {
    throw DimensionError("adamw_step: parameter/gradient/state shape mismatch");
  }
  state.step += 1;
  const double b1 = state.cfg.beta1;
  const double b2 = state.cfg.beta2;
  const double bc1 =
      1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 =
      1.0 - std::pow(b2, static_cast<double>(state.step));
  const double wd = state.cfg.weight_decay;
  const double eps = state.cfg.eps;
  for (std::size_t i = 0; i < params.data.size(); ++i) {
    const double g = grads.data[i];
    state.m.data[i] = b1 * state.m.data[i] + (1.0 - b1) * g;
    state.v.data[i] = b2 * state.v.data[i] + (1.0 - b2) * g * g;
    const double mhat = state.m.data[i] / bc1;
    const double vhat = state.v.data[i] / bc2;
    params.data[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + wd * params.data[i]);
  }
}

double lr_at(const LrSchedule& schedule, std::int64_t step) {
  if (step < 0 || step > schedule.total_steps) {
    throw DomainError("lr_at: step " + std::to_string(step) +
                      " outside [0, " + std::to_string(schedule.total_steps) +
                      "]");
  }
  const auto warmup_steps = static_cast<std::int64_t>(
      schedule.warmup_ratio * static_cast<double>(schedule.total_steps));
  if (step < warmup_steps) {
    return schedule.base_lr * static_cast<double>(step) /
           static_cast<double>(warmup_steps);
  }
  const auto span = schedule.total_steps - warmup_steps;
  if (span <= 0) return schedule.base_lr;
  const double progress =
      static_cast<double>(step - warmup_steps) / static_cast<double>(span);
  return schedule.floor_lr +
         (schedule.base_lr - schedule.floor_lr) * 0.5 *
             (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace rgrpo
