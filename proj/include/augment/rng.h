// Copyright 2026 The Augment Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef AUGMENT_RNG_H_
#define AUGMENT_RNG_H_

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace augment {

// Derives an independent stream seed from a master seed and a label, so
// per-item randomness does not depend on scheduling order.
std::uint64_t DeriveSeed(std::uint64_t master, std::string_view label);
std::uint64_t DeriveSeed(std::uint64_t master, std::uint64_t index);

// Pseudo-random source with platform-independent distributions. The
// standard library's distribution objects are implementation-defined, which
// would break byte-stable outputs across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }
  // Uniform on [0, 1).
  double Uniform();
  // Uniform integer on [0, n). n must be > 0.
  std::uint64_t UniformIndex(std::uint64_t n);
  double Normal(double mean, double stddev);
  bool Bernoulli(double p) { return Uniform() < p; }
  // Index drawn proportionally to `weights` (non-negative, positive sum).
  std::size_t Categorical(std::span<const double> weights);

 private:
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace augment

#endif  // AUGMENT_RNG_H_
