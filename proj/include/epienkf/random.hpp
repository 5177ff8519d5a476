/*
 * Copyright (C) 2026 epienkf contributors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef EPIENKF_RANDOM_HPP
#define EPIENKF_RANDOM_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace epienkf {

/**
 * Seedable, splittable pseudo-random source.
 *
 * Children produced by split() depend only on the parent seed and the key,
 * never on how many numbers the parent has already produced. A run can
 * therefore be reproduced from the master seed alone, and the per-stream
 * seeds written to a manifest are exactly seed() of each child.
 *
 * Not thread-safe: every worker owns its own split.
 */
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed);

    std::uint64_t seed() const noexcept { return seed_; }

    RandomStream split(std::uint64_t key) const;
    RandomStream split(std::string_view name) const;

    /// Uniform on [0, 1).
    double uniform();
    double normal(double mean = 0.0, double stddev = 1.0);
    /// Poisson draw. Inversion below mean 10, transformed rejection (PTRS) above.
    double poisson(double mean);

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

} // namespace epienkf

#endif // EPIENKF_RANDOM_HPP
