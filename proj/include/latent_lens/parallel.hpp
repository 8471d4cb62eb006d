// Copyright 2026 The latent-lens Authors.
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

#ifndef LATENT_LENS_PARALLEL_HPP_
#define LATENT_LENS_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace latent_lens {

// Worker count: LATENT_LENS_THREADS if set (>= 1), else hardware concurrency.
unsigned worker_count();

// Runs fn(i) for i in [0, n). Iterations must write disjoint outputs; results
// are therefore independent of the thread count. The first exception thrown
// by any iteration is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace latent_lens

#endif  // LATENT_LENS_PARALLEL_HPP_
