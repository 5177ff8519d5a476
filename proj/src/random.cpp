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

#include "epienkf/random.hpp"

#include "epienkf/error.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace epienkf {

std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

namespace {

std::uint64_t fnv1a(std::string_view s) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Knuth-style sequential inversion; fine while exp(-mean) is well away from underflow.
double poisson_inversion(RandomStream& rng, double mean)
{
    const double u = rng.uniform();
    double p = std::exp(-mean);
    double cdf = p;
    double k = 0.0;
    while (u > cdf) {
        k += 1.0;
        p *= mean / k;
        cdf += p;
        if (p < 1e-300 && k > mean) {
            break;
        }
    }
    return k;
}

// Hörmann (1993), "The transformed rejection method for generating Poisson
// random variables".
double poisson_ptrs(RandomStream& rng, double mean)
{
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);

    for (;;) {
        const double u = rng.uniform() - 0.5;
        const double v = rng.uniform();
        const double us = 0.5 - std::fabs(u);
        const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= vr) {
            return k;
        }
        if (k < 0.0 || (us < 0.013 && v > us)) {
            continue;
        }
        if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b)
            <= -mean + k * loglam - std::lgamma(k + 1.0)) {
            return k;
        }
    }
}

} // namespace

RandomStream::RandomStream(std::uint64_t seed)
    : seed_(seed), engine_(splitmix64(seed))
{
}

RandomStream RandomStream::split(std::uint64_t key) const
{
    return RandomStream(splitmix64(seed_ ^ splitmix64(key ^ 0x6a09e667f3bcc909ULL)));
}

RandomStream RandomStream::split(std::string_view name) const
{
    return split(fnv1a(name));
}

double RandomStream::uniform()
{
    // 53 random mantissa bits.
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RandomStream::normal(double mean, double stddev)
{
    return mean + stddev * normal_(engine_);
}

double RandomStream::poisson(double mean)
{
    if (!(mean >= 0.0) || !std::isfinite(mean)) {
        throw Error(ErrorCode::invalid_parameter,
                    "poisson mean must be finite and nonnegative, got " + std::to_string(mean));
    }
    if (mean == 0.0) {
        return 0.0;
    }
    if (mean < 10.0) {
        return poisson_inversion(*this, mean);
    }
    return poisson_ptrs(*this, mean);
}

} // namespace epienkf
