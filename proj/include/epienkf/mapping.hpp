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

#ifndef EPIENKF_MAPPING_HPP
#define EPIENKF_MAPPING_HPP

#include "epienkf/grid.hpp"

namespace epienkf {

/**
 * Displacement field T in km, one vector per grid node.
 *
 * Composition convention: (u o (I+T))(x) = u(x + T(x)), i.e. T displaces the
 * position at which u is sampled.
 */
struct WarpMapping {
    FieldBlock tx;
    FieldBlock ty;

    static WarpMapping zero(const Grid& grid) { return {FieldBlock(grid), FieldBlock(grid)}; }

    /// Largest Euclidean displacement over all nodes, km.
    double max_displacement() const;
    /// True when every node on the outer ring of the grid has zero displacement.
    bool zero_on_boundary() const;
};

/// Sets displacement on the outer ring of nodes to exactly zero.
void clear_boundary(FieldBlock& f);

} // namespace epienkf

#endif // EPIENKF_MAPPING_HPP
