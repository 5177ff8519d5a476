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

#ifndef EPIENKF_GRID_HPP
#define EPIENKF_GRID_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace epienkf {

/**
 * Rectangular cell decomposition of the domain.
 *
 * Layout convention, used uniformly by every module: x is the first index,
 * storage is row-major so cell (i, j) lives at i * ny + j, and cell centers
 * sit at ((i + 0.5) dx, (j + 0.5) dy) in km.
 */
class Grid {
public:
    std::size_t nx() const noexcept { return nx_; }
    std::size_t ny() const noexcept { return ny_; }
    double dx() const noexcept { return dx_; }
    double dy() const noexcept { return dy_; }
    double cell_area() const noexcept { return dx_ * dy_; }
    std::size_t size() const noexcept { return nx_ * ny_; }

    double center_x(std::size_t i) const noexcept { return (static_cast<double>(i) + 0.5) * dx_; }
    double center_y(std::size_t j) const noexcept { return (static_cast<double>(j) + 0.5) * dy_; }

    std::size_t index(std::size_t i, std::size_t j) const noexcept { return i * ny_ + j; }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    friend Grid make_grid(std::size_t, std::size_t, double, double);
    Grid(std::size_t nx, std::size_t ny, double dx, double dy)
        : nx_(nx), ny_(ny), dx_(dx), dy_(dy) {}

    std::size_t nx_;
    std::size_t ny_;
    double dx_;
    double dy_;
};

/// Throws Error(dimension_too_small) for nx or ny below 4 and
/// Error(nonpositive_spacing) unless dx, dy > 0.
Grid make_grid(std::size_t nx, std::size_t ny, double dx, double dy);

/// One real-valued field over the grid, shape (nx, ny).
class FieldBlock {
public:
    FieldBlock() = default;
    FieldBlock(std::size_t nx, std::size_t ny, double fill = 0.0)
        : nx_(nx), ny_(ny), values_(nx * ny, fill) {}
    explicit FieldBlock(const Grid& grid, double fill = 0.0)
        : FieldBlock(grid.nx(), grid.ny(), fill) {}
    FieldBlock(std::size_t nx, std::size_t ny, std::vector<double> values);

    std::size_t nx() const noexcept { return nx_; }
    std::size_t ny() const noexcept { return ny_; }
    std::size_t size() const noexcept { return values_.size(); }

    double& operator()(std::size_t i, std::size_t j) noexcept { return values_[i * ny_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * ny_ + j]; }
    double& operator[](std::size_t k) noexcept { return values_[k]; }
    double operator[](std::size_t k) const noexcept { return values_[k]; }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    bool same_shape(const FieldBlock& other) const noexcept
    {
        return nx_ == other.nx_ && ny_ == other.ny_;
    }
    bool matches(const Grid& grid) const noexcept { return nx_ == grid.nx() && ny_ == grid.ny(); }

    FieldBlock& operator+=(const FieldBlock& other);
    FieldBlock& operator-=(const FieldBlock& other);
    FieldBlock& operator*=(double a);

    friend bool operator==(const FieldBlock&, const FieldBlock&) = default;

private:
    std::size_t nx_ = 0;
    std::size_t ny_ = 0;
    std::vector<double> values_;
};

FieldBlock operator+(FieldBlock a, const FieldBlock& b);
FieldBlock operator-(FieldBlock a, const FieldBlock& b);
FieldBlock operator*(double a, FieldBlock f);

double sum(const FieldBlock& f);
double max_abs(const FieldBlock& f);
double max_abs_diff(const FieldBlock& a, const FieldBlock& b);
/// ||a - b||_2 / ||b||_2 (absolute norm when b is zero).
double relative_l2(const FieldBlock& a, const FieldBlock& b);
bool all_finite(const FieldBlock& f);

/// Ordered blocks of one state vector, e.g. (S, I, R) or (tx, ty, r1..rM).
using BlockState = std::vector<FieldBlock>;

/// Susceptible, infected and removed people per cell.
struct ModelState {
    Grid grid;
    FieldBlock s;
    FieldBlock i;
    FieldBlock r;
    double time = 0.0;

    static constexpr std::size_t block_count = 3;

    /// All-zero state on `grid`.
    static ModelState zeros(const Grid& grid, double time = 0.0);

    BlockState blocks() const { return {s, i, r}; }
    void set_blocks(const BlockState& blocks);
    FieldBlock& block(std::size_t k);
    const FieldBlock& block(std::size_t k) const;
};

struct Ensemble {
    std::vector<ModelState> members;
    std::optional<ModelState> reference;

    std::size_t size() const noexcept { return members.size(); }
};

double total_population(const ModelState& state);
/// Per-cell S + I + R.
FieldBlock cell_population(const ModelState& state);

/// Per-cell, per-block arithmetic mean of the members; the reference member is
/// not included. Throws Error(empty_ensemble).
ModelState ensemble_mean(const Ensemble& ens);
FieldBlock mean_field(std::span<const FieldBlock> fields);

} // namespace epienkf

#endif // EPIENKF_GRID_HPP
