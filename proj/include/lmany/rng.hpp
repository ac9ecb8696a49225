// Copyright 2026 The lmany Authors.
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

/**
 * @file rng.hpp
 * Counter-based generator: the k-th draw of stream s under seed x is a pure
 * function of (x, s, k), so trials can be evaluated in any order or split
 * across workers without changing results.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "lmany/linalg.hpp"

namespace lmany {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class CounterRng {
  public:
    constexpr CounterRng(std::uint64_t seed, std::uint64_t stream)
        : key_(mix64(mix64(seed) ^ mix64(stream ^ 0xd1b54a32d192ed03ULL))) {}

    constexpr std::uint64_t next() { return mix64(key_ ^ mix64(counter_++)); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound) by rejection; bound > 0.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = -bound % bound; // 2^64 mod bound
        for (;;) {
            const std::uint64_t x = next();
            const auto wide = static_cast<unsigned __int128>(x) * bound;
            if (static_cast<std::uint64_t>(wide) >= limit) {
                return static_cast<std::uint64_t>(wide >> 64);
            }
        }
    }

    /// Uniform point on the unit sphere.
    Vec3 unit_vector() {
        const double z = 2.0 * uniform() - 1.0;
        const double phi = 2.0 * std::numbers::pi * uniform();
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        return Vec3(r * std::cos(phi), r * std::sin(phi), z);
    }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace lmany
