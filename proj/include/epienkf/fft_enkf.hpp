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

#ifndef EPIENKF_FFT_ENKF_HPP
#define EPIENKF_FFT_ENKF_HPP

#include "epienkf/enkf.hpp"
#include "epienkf/spectral.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace epienkf {

/// Per-mode variance or cross-covariance; same layout as SpectralField.
struct SpectralDiag {
    FieldBlock c_hat;
};

/// Per-mode sample variance, divisor N - 1. Throws ensemble_too_small for N < 2.
SpectralDiag spectral_variance(std::span<const SpectralField> member_coeffs);

/// Per-mode sample covariance between the members' block j and block 1.
SpectralDiag spectral_cross_covariance(std::span<const SpectralField> coeffs_j,
                                       std::span<const SpectralField> coeffs_1);

/**
 * FFT EnKF analysis. In the sine-transform domain, for every mode i, member
 * k and block j,
 *
 *   u^(j),a = u^(j) + sum_p c^(jp) / (c^(pp) + r_p) * (d_p + e_kp - u^(p))
 *
 * where p runs over the observed parts. Observed blocks take only their own
 * term: covariance between different observed parts is neglected. With one
 * observed block this is the single-observation spectral update. The data
 * noise e_k is given in physical space and transformed, so the dense filter
 * can be run with the same realizations.
 *
 * Throws invalid_parameter when any observation variance is <= 0.
 */
std::vector<BlockState> fft_enkf_analysis(std::span<const BlockState> members, const Observation& obs,
                                          const Perturbations& noise);

Ensemble fft_enkf_analysis(const Ensemble& ens, const ObsSpec& obs, RandomStream& rng);

/**
 * The covariance the spectral filter implicitly uses, materialized over the
 * flattened state: block (j, l) is F diag(c^(jl)) F, with blocks between two
 * distinct observed parts set to zero. Only sensible on small grids; pairs
 * with dense_analysis_with_covariance as an independent check.
 */
Eigen::MatrixXd spectral_covariance_matrix(std::span<const BlockState> members, const Observation& obs);

/// Orthonormal 2D DST-I as an explicit (nx ny) x (nx ny) matrix.
Eigen::MatrixXd dst2_matrix(std::size_t nx, std::size_t ny);

} // namespace epienkf

#endif // EPIENKF_FFT_ENKF_HPP
