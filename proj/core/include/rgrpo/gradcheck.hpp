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

#ifndef RGRPO_GRADCHECK_HPP_
#define RGRPO_GRADCHECK_HPP_

#include <cstdint>
#include <functional>

#include "rgrpo/tensor.hpp"

namespace rgrpo {

// Central-difference probe of an analytic gradient at `probes` randomly
// chosen coordinates. Returns the max over probes of
// |fd - analytic| / max(|fd|, |analytic|, 1e-8).
double finite_diff_check(const std::function<double(const Tensor2&)>& loss_fn,
                         const Tensor2& params, const Tensor2& analytic_grads,
                         double h, int probes, std::uint64_t seed);

}  // namespace rgrpo

#endif  // RGRPO_GRADCHECK_HPP_
