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

#ifndef EPIENKF_ERROR_HPP
#define EPIENKF_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace epienkf {

/// Failure categories. The CLI prints the code name verbatim so errors stay
/// machine-parsable.
enum class ErrorCode {
    dimension_too_small,
    nonpositive_spacing,
    shape_mismatch,
    index_out_of_range,
    empty_ensemble,
    ensemble_too_small,
    state_too_large,
    negative_state,
    invalid_parameter,
    linear_solve_failure,
    non_invertible_mapping,
    undefined_centroid,
    parse_error,
    validation_error,
    io_error,
    malformed_header,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace epienkf

#endif // EPIENKF_ERROR_HPP
