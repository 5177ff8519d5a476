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

#include "epienkf/error.hpp"

namespace epienkf {

std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::dimension_too_small: return "dimension-too-small";
    case ErrorCode::nonpositive_spacing: return "nonpositive-spacing";
    case ErrorCode::shape_mismatch: return "shape-mismatch";
    case ErrorCode::index_out_of_range: return "index-out-of-range";
    case ErrorCode::empty_ensemble: return "empty-ensemble";
    case ErrorCode::ensemble_too_small: return "ensemble-too-small";
    case ErrorCode::state_too_large: return "state-too-large";
    case ErrorCode::negative_state: return "negative-state";
    case ErrorCode::invalid_parameter: return "invalid-parameter";
    case ErrorCode::linear_solve_failure: return "linear-solve-failure";
    case ErrorCode::non_invertible_mapping: return "non-invertible-mapping";
    case ErrorCode::undefined_centroid: return "undefined-centroid";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::validation_error: return "validation-error";
    case ErrorCode::io_error: return "io-error";
    case ErrorCode::malformed_header: return "malformed-header";
    }
    return "unknown";
}

} // namespace epienkf
