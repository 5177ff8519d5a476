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

#ifndef EPIENKF_TESTS_SUPPORT_HPP
#define EPIENKF_TESTS_SUPPORT_HPP

#include "epienkf/grid.hpp"
#include "epienkf/random.hpp"

#include <cmath>
#include <numbers>

namespace epienkf::test {

inline FieldBlock random_field(std::size_t nx, std::size_t ny, RandomStream& rng, double lo = -1.0,
                               double hi = 1.0)
{
    FieldBlock f(nx, ny);
    for (auto& v : f.values()) {
        v = lo + (hi - lo) * rng.uniform();
    }
    return f;
}

inline FieldBlock gaussian_bump(std::size_t nx, std::size_t ny, double ci, double cj, double sigma,
                                double peak = 1.0)
{
    FieldBlock f(nx, ny);
    for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t j = 0; j < ny; ++j) {
            const double di = static_cast<double>(i) - ci;
            const double dj = static_cast<double>(j) - cj;
            f(i, j) = peak * std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
        }
    }
    return f;
}

/// Constant interior value with a zero outer ring of nodes.
inline FieldBlock taper(std::size_t nx, std::size_t ny, double value)
{
    FieldBlock f(nx, ny);
    for (std::size_t i = 1; i + 1 < nx; ++i) {
        for (std::size_t j = 1; j + 1 < ny; ++j) {
            f(i, j) = value;
        }
    }
    return f;
}

} // namespace epienkf::test

#endif // EPIENKF_TESTS_SUPPORT_HPP
