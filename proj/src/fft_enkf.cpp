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

#include "epienkf/fft_enkf.hpp"

#include "epienkf/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace epienkf {

namespace {

void check_coeffs(std::span<const SpectralField> coeffs)
{
    if (coeffs.size() < 2) {
        throw Error(ErrorCode::ensemble_too_small,
                    "spectral covariance needs at least 2 members, got " + std::to_string(coeffs.size()));
    }
    for (const auto& c : coeffs) {
        if (!c.coeffs.same_shape(coeffs.front().coeffs)) {
            throw Error(ErrorCode::shape_mismatch, "member coefficients have different shapes");
        }
    }
}

FieldBlock mode_mean(std::span<const SpectralField> coeffs)
{
    FieldBlock mean(coeffs.front().coeffs.nx(), coeffs.front().coeffs.ny());
    for (const auto& c : coeffs) {
        mean += c.coeffs;
    }
    mean *= 1.0 / static_cast<double>(coeffs.size());
    return mean;
}

} // namespace

SpectralDiag spectral_cross_covariance(std::span<const SpectralField> coeffs_j,
                                       std::span<const SpectralField> coeffs_1)
{
    check_coeffs(coeffs_j);
    check_coeffs(coeffs_1);
    if (coeffs_j.size() != coeffs_1.size() || !coeffs_j.front().coeffs.same_shape(coeffs_1.front().coeffs)) {
        throw Error(ErrorCode::shape_mismatch, "cross-covariance operands differ in size or shape");
    }
    const FieldBlock mean_j = mode_mean(coeffs_j);
    const FieldBlock mean_1 = mode_mean(coeffs_1);
    FieldBlock c(mean_j.nx(), mean_j.ny());
    for (std::size_t k = 0; k < coeffs_j.size(); ++k) {
        const auto& uj = coeffs_j[k].coeffs;
        const auto& u1 = coeffs_1[k].coeffs;
        for (std::size_t m = 0; m < c.size(); ++m) {
            c[m] += (uj[m] - mean_j[m]) * (u1[m] - mean_1[m]);
        }
    }
    c *= 1.0 / static_cast<double>(coeffs_j.size() - 1);
    return SpectralDiag{std::move(c)};
}

SpectralDiag spectral_variance(std::span<const SpectralField> member_coeffs)
{
    SpectralDiag v = spectral_cross_covariance(member_coeffs, member_coeffs);
    for (double& x : v.c_hat.values()) {
        x = std::max(x, 0.0);
    }
    return v;
}

namespace {

void check_inputs(std::span<const BlockState> members, const Observation& obs, const Perturbations& noise)
{
    if (members.size() < 2) {
        throw Error(ErrorCode::ensemble_too_small, "FFT EnKF needs at least 2 members");
    }
    const BlockState& shape = members.front();
    for (const auto& m : members) {
        if (m.size() != shape.size()) {
            throw Error(ErrorCode::shape_mismatch, "members have different block counts");
        }
        for (std::size_t b = 0; b < m.size(); ++b) {
            if (!m[b].same_shape(shape[b])) {
                throw Error(ErrorCode::shape_mismatch, "members have different block shapes");
            }
        }
    }
    for (std::size_t p = 0; p < obs.parts.size(); ++p) {
        const auto& part = obs.parts[p];
        if (!(part.variance > 0.0) || !std::isfinite(part.variance)) {
            throw Error(ErrorCode::invalid_parameter, "observation variance r must be > 0");
        }
        if (part.block >= shape.size()) {
            throw Error(ErrorCode::index_out_of_range, "observed block index out of range");
        }
        if (!part.data.same_shape(shape[part.block])) {
            throw Error(ErrorCode::shape_mismatch, "observation data shape does not match its block");
        }
        for (std::size_t q = 0; q < p; ++q) {
            if (obs.parts[q].block == part.block) {
                throw Error(ErrorCode::invalid_parameter, "a block is observed twice");
            }
        }
    }
    if (noise.size() != members.size()) {
        throw Error(ErrorCode::shape_mismatch, "need one data perturbation per member");
    }
    for (const auto& e : noise) {
        if (e.size() != obs.parts.size()) {
            throw Error(ErrorCode::shape_mismatch, "need one perturbation block per observed part");
        }
    }
}

std::vector<SpectralField> column(const std::vector<std::vector<SpectralField>>& hat, std::size_t block)
{
    std::vector<SpectralField> out;
    out.reserve(hat.size());
    for (const auto& member : hat) {
        out.push_back(member[block]);
    }
    return out;
}

} // namespace

std::vector<BlockState> fft_enkf_analysis(std::span<const BlockState> members, const Observation& obs,
                                          const Perturbations& noise)
{
    check_inputs(members, obs, noise);
    const std::size_t n_members = members.size();
    const std::size_t n_blocks = members.front().size();
    const std::size_t n_parts = obs.parts.size();

    // Forward transforms of every member block and every perturbation.
    std::vector<std::vector<SpectralField>> u_hat(n_members, std::vector<SpectralField>(n_blocks));
    std::vector<std::vector<SpectralField>> e_hat(n_members, std::vector<SpectralField>(n_parts));
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t kk = 0; kk < static_cast<std::ptrdiff_t>(n_members); ++kk) {
        const auto k = static_cast<std::size_t>(kk);
        for (std::size_t b = 0; b < n_blocks; ++b) {
            u_hat[k][b] = dst2_forward(members[k][b]);
        }
        for (std::size_t p = 0; p < n_parts; ++p) {
            e_hat[k][p] = dst2_forward(noise[k][p]);
        }
    }
    std::vector<SpectralField> d_hat;
    d_hat.reserve(n_parts);
    for (const auto& part : obs.parts) {
        d_hat.push_back(dst2_forward(part.data));
    }

    // gain[j][p] = c^(jp) / (c^(pp) + r_p); empty when the term is neglected.
    std::vector<std::vector<SpectralField>> per_block(n_blocks);
    for (std::size_t b = 0; b < n_blocks; ++b) {
        per_block[b] = column(u_hat, b);
    }
    std::vector<FieldBlock> obs_var;
    obs_var.reserve(n_parts);
    for (const auto& part : obs.parts) {
        obs_var.push_back(spectral_variance(per_block[part.block]).c_hat);
    }
    auto observed_part = [&](std::size_t block) -> std::ptrdiff_t {
        for (std::size_t p = 0; p < n_parts; ++p) {
            if (obs.parts[p].block == block) {
                return static_cast<std::ptrdiff_t>(p);
            }
        }
        return -1;
    };

    std::vector<std::vector<FieldBlock>> gain(n_blocks, std::vector<FieldBlock>(n_parts));
    for (std::size_t b = 0; b < n_blocks; ++b) {
        const std::ptrdiff_t own = observed_part(b);
        for (std::size_t p = 0; p < n_parts; ++p) {
            if (own >= 0 && static_cast<std::size_t>(own) != p) {
                continue;
            }
            FieldBlock g = own >= 0 ? obs_var[p]
                                    : spectral_cross_covariance(per_block[b], per_block[obs.parts[p].block]).c_hat;
            const FieldBlock& c_pp = obs_var[p];
            for (std::size_t m = 0; m < g.size(); ++m) {
                g[m] /= c_pp[m] + obs.parts[p].variance;
            }
            gain[b][p] = std::move(g);
        }
    }

    std::vector<BlockState> out(n_members);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t kk = 0; kk < static_cast<std::ptrdiff_t>(n_members); ++kk) {
        const auto k = static_cast<std::size_t>(kk);
        std::vector<FieldBlock> innov(n_parts);
        for (std::size_t p = 0; p < n_parts; ++p) {
            FieldBlock v = d_hat[p].coeffs;
            v += e_hat[k][p].coeffs;
            v -= u_hat[k][obs.parts[p].block].coeffs;
            innov[p] = std::move(v);
        }
        out[k].reserve(n_blocks);
        for (std::size_t b = 0; b < n_blocks; ++b) {
            SpectralField a = u_hat[k][b];
            for (std::size_t p = 0; p < n_parts; ++p) {
                const FieldBlock& g = gain[b][p];
                if (g.size() == 0) {
                    continue;
                }
                for (std::size_t m = 0; m < g.size(); ++m) {
                    a.coeffs[m] += g[m] * innov[p][m];
                }
            }
            out[k].push_back(dst2_inverse(a));
        }
    }
    return out;
}

Ensemble fft_enkf_analysis(const Ensemble& ens, const ObsSpec& obs, RandomStream& rng)
{
    const auto blocks = member_blocks(ens);
    const Observation o = Observation::from(obs);
    const Perturbations noise = draw_perturbations(o, blocks.size(), rng);
    return with_member_blocks(ens, fft_enkf_analysis(blocks, o, noise));
}

Eigen::MatrixXd dst2_matrix(std::size_t nx, std::size_t ny)
{
    auto table = [](std::size_t n) {
        Eigen::MatrixXd s(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        const double norm = std::sqrt(2.0 / static_cast<double>(n + 1));
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t i = 0; i < n; ++i) {
                s(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(i))
                    = norm * std::sin(std::numbers::pi * static_cast<double>((p + 1) * (i + 1))
                                      / static_cast<double>(n + 1));
            }
        }
        return s;
    };
    const Eigen::MatrixXd sx = table(nx);
    const Eigen::MatrixXd sy = table(ny);
    // Row-major flattening (i * ny + j): Kronecker product sx (x) sy.
    const auto n = static_cast<Eigen::Index>(nx * ny);
    Eigen::MatrixXd f(n, n);
    for (Eigen::Index p = 0; p < sx.rows(); ++p) {
        for (Eigen::Index i = 0; i < sx.cols(); ++i) {
            f.block(p * sy.rows(), i * sy.cols(), sy.rows(), sy.cols()) = sx(p, i) * sy;
        }
    }
    return f;
}

Eigen::MatrixXd spectral_covariance_matrix(std::span<const BlockState> members, const Observation& obs)
{
    if (members.size() < 2) {
        throw Error(ErrorCode::ensemble_too_small, "spectral covariance needs at least 2 members");
    }
    const BlockState& shape = members.front();
    const std::size_t n_blocks = shape.size();
    std::vector<std::vector<SpectralField>> per_block(n_blocks);
    for (std::size_t b = 0; b < n_blocks; ++b) {
        for (const auto& m : members) {
            per_block[b].push_back(dst2_forward(m[b]));
        }
    }
    auto is_observed = [&](std::size_t b) {
        return std::any_of(obs.parts.begin(), obs.parts.end(), [b](const auto& p) { return p.block == b; });
    };

    std::vector<Eigen::Index> offsets(n_blocks + 1, 0);
    for (std::size_t b = 0; b < n_blocks; ++b) {
        offsets[b + 1] = offsets[b] + static_cast<Eigen::Index>(shape[b].size());
    }
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(offsets[n_blocks], offsets[n_blocks]);
    for (std::size_t j = 0; j < n_blocks; ++j) {
        for (std::size_t l = 0; l < n_blocks; ++l) {
            if (j != l && is_observed(j) && is_observed(l)) {
                continue;
            }
            if (!shape[j].same_shape(shape[l])) {
                continue;
            }
            const Eigen::MatrixXd f = dst2_matrix(shape[j].nx(), shape[j].ny());
            const FieldBlock diag = spectral_cross_covariance(per_block[j], per_block[l]).c_hat;
            Eigen::VectorXd d(static_cast<Eigen::Index>(diag.size()));
            for (std::size_t m = 0; m < diag.size(); ++m) {
                d(static_cast<Eigen::Index>(m)) = j == l ? std::max(diag[m], 0.0) : diag[m];
            }
            c.block(offsets[j], offsets[l], f.rows(), f.cols()) = f * d.asDiagonal() * f;
        }
    }
    return c;
}

} // namespace epienkf
