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

#include "epienkf/enkf.hpp"

#include "epienkf/error.hpp"

#include <cmath>
#include <string>

namespace epienkf {

Observation Observation::from(const ObsSpec& obs)
{
    return Observation{{Part{obs.observed_block, obs.r, obs.data}}};
}

namespace {

void check_members(std::span<const BlockState> members)
{
    if (members.size() < 2) {
        throw Error(ErrorCode::ensemble_too_small,
                    "analysis needs at least 2 members, got " + std::to_string(members.size()));
    }
    const BlockState& first = members.front();
    for (const auto& m : members) {
        if (m.size() != first.size()) {
            throw Error(ErrorCode::shape_mismatch, "members have different block counts");
        }
        for (std::size_t b = 0; b < m.size(); ++b) {
            if (!m[b].same_shape(first[b])) {
                throw Error(ErrorCode::shape_mismatch, "members have different block shapes");
            }
        }
    }
}

void check_observation(const Observation& obs, const BlockState& shape, const Perturbations& noise,
                       std::size_t members)
{
    for (const auto& part : obs.parts) {
        if (part.block >= shape.size()) {
            throw Error(ErrorCode::index_out_of_range, "observed block index out of range");
        }
        if (!part.data.same_shape(shape[part.block])) {
            throw Error(ErrorCode::shape_mismatch, "observation data shape does not match its block");
        }
    }
    if (noise.size() != members) {
        throw Error(ErrorCode::shape_mismatch, "need one data perturbation per member");
    }
    for (const auto& e : noise) {
        if (e.size() != obs.parts.size()) {
            throw Error(ErrorCode::shape_mismatch, "need one perturbation block per observed part");
        }
    }
}

/// Flat offsets of each block in the concatenated state.
std::vector<std::size_t> block_offsets(const BlockState& shape)
{
    std::vector<std::size_t> offsets(shape.size() + 1, 0);
    for (std::size_t b = 0; b < shape.size(); ++b) {
        offsets[b + 1] = offsets[b] + shape[b].size();
    }
    return offsets;
}

} // namespace

FieldBlock perturb_data(const ObsSpec& obs, RandomStream& rng)
{
    FieldBlock out = obs.data;
    const double sd = std::sqrt(obs.r);
    for (double& v : out.values()) {
        v += rng.normal(0.0, sd);
    }
    return out;
}

Perturbations draw_perturbations(const Observation& obs, std::size_t members, RandomStream& rng)
{
    Perturbations out(members);
    for (auto& e : out) {
        e.reserve(obs.parts.size());
        for (const auto& part : obs.parts) {
            FieldBlock noise(part.data.nx(), part.data.ny());
            const double sd = std::sqrt(part.variance);
            for (double& v : noise.values()) {
                v = rng.normal(0.0, sd);
            }
            e.push_back(std::move(noise));
        }
    }
    return out;
}

Perturbations zero_perturbations(const Observation& obs, std::size_t members)
{
    Perturbations out(members);
    for (auto& e : out) {
        for (const auto& part : obs.parts) {
            e.emplace_back(part.data.nx(), part.data.ny());
        }
    }
    return out;
}

Eigen::VectorXd flatten(const BlockState& state)
{
    std::size_t n = 0;
    for (const auto& b : state) {
        n += b.size();
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    Eigen::Index k = 0;
    for (const auto& b : state) {
        for (double x : b.values()) {
            v(k++) = x;
        }
    }
    return v;
}

BlockState unflatten(const Eigen::VectorXd& v, const BlockState& shape)
{
    BlockState out;
    out.reserve(shape.size());
    Eigen::Index k = 0;
    for (const auto& b : shape) {
        FieldBlock f(b.nx(), b.ny());
        for (double& x : f.values()) {
            x = v(k++);
        }
        out.push_back(std::move(f));
    }
    return out;
}

namespace {

Eigen::MatrixXd member_matrix(std::span<const BlockState> members)
{
    const Eigen::VectorXd first = flatten(members.front());
    Eigen::MatrixXd x(first.size(), static_cast<Eigen::Index>(members.size()));
    x.col(0) = first;
    for (std::size_t k = 1; k < members.size(); ++k) {
        x.col(static_cast<Eigen::Index>(k)) = flatten(members[k]);
    }
    return x;
}

/// Anomalies scaled by 1/sqrt(N-1), so that A A^T is the sample covariance.
Eigen::MatrixXd scaled_anomalies(const Eigen::MatrixXd& x)
{
    const Eigen::VectorXd mean = x.rowwise().mean();
    Eigen::MatrixXd a = x.colwise() - mean;
    a /= std::sqrt(static_cast<double>(x.cols() - 1));
    return a;
}

struct ObservedIndex {
    std::vector<Eigen::Index> rows;   // flat state index of each observed entry
    Eigen::VectorXd variance;         // per observed entry
};

ObservedIndex observed_index(const Observation& obs, const BlockState& shape)
{
    const auto offsets = block_offsets(shape);
    ObservedIndex idx;
    std::size_t m = 0;
    for (const auto& part : obs.parts) {
        m += shape[part.block].size();
    }
    idx.rows.reserve(m);
    idx.variance.resize(static_cast<Eigen::Index>(m));
    Eigen::Index k = 0;
    for (const auto& part : obs.parts) {
        if (!(part.variance > 0.0) || !std::isfinite(part.variance)) {
            throw Error(ErrorCode::linear_solve_failure,
                        "observation variance must be positive and finite");
        }
        for (std::size_t c = 0; c < shape[part.block].size(); ++c) {
            idx.rows.push_back(static_cast<Eigen::Index>(offsets[part.block] + c));
            idx.variance(k++) = part.variance;
        }
    }
    return idx;
}

/// Columns d + e_k - H u_k.
Eigen::MatrixXd innovations(const Eigen::MatrixXd& x, const Observation& obs,
                            const ObservedIndex& idx, const Perturbations& noise)
{
    const auto m = static_cast<Eigen::Index>(idx.rows.size());
    Eigen::MatrixXd y(m, x.cols());
    for (Eigen::Index k = 0; k < x.cols(); ++k) {
        Eigen::Index row = 0;
        for (std::size_t p = 0; p < obs.parts.size(); ++p) {
            const auto& d = obs.parts[p].data;
            const auto& e = noise[static_cast<std::size_t>(k)][p];
            for (std::size_t c = 0; c < d.size(); ++c, ++row) {
                y(row, k) = d[c] + e[c] - x(idx.rows[static_cast<std::size_t>(row)], k);
            }
        }
    }
    return y;
}

std::vector<BlockState> to_blocks(const Eigen::MatrixXd& x, const BlockState& shape)
{
    std::vector<BlockState> out;
    out.reserve(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index k = 0; k < x.cols(); ++k) {
        out.push_back(unflatten(x.col(k), shape));
    }
    return out;
}

void require_finite(const Eigen::MatrixXd& m, const char* what)
{
    if (!m.allFinite()) {
        throw Error(ErrorCode::linear_solve_failure, std::string("non-finite ") + what);
    }
}

} // namespace

Eigen::MatrixXd sample_covariance(std::span<const BlockState> members)
{
    check_members(members);
    std::size_t n = 0;
    for (const auto& b : members.front()) {
        n += b.size();
    }
    if (n > max_dense_state) {
        throw Error(ErrorCode::state_too_large,
                    "state dimension " + std::to_string(n) + " too large to materialize a covariance");
    }
    const Eigen::MatrixXd a = scaled_anomalies(member_matrix(members));
    return a * a.transpose();
}

Eigen::MatrixXd sample_covariance(const Ensemble& ens)
{
    const auto blocks = member_blocks(ens);
    return sample_covariance(std::span<const BlockState>(blocks));
}

std::vector<BlockState> dense_analysis(std::span<const BlockState> members, const Observation& obs,
                                       const Perturbations& noise)
{
    check_members(members);
    const BlockState& shape = members.front();
    check_observation(obs, shape, noise, members.size());
    const ObservedIndex idx = observed_index(obs, shape);

    Eigen::MatrixXd x = member_matrix(members);
    require_finite(x, "forecast ensemble");
    const Eigen::MatrixXd a = scaled_anomalies(x);
    const auto m = static_cast<Eigen::Index>(idx.rows.size());
    const auto n_members = x.cols();

    Eigen::MatrixXd y(m, n_members);
    for (Eigen::Index r = 0; r < m; ++r) {
        y.row(r) = a.row(idx.rows[static_cast<std::size_t>(r)]);
    }
    const Eigen::VectorXd r_inv = idx.variance.cwiseInverse();
    const Eigen::MatrixXd rinv_y = r_inv.asDiagonal() * y;

    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n_members, n_members) + y.transpose() * rinv_y;
    const Eigen::MatrixXd innov = innovations(x, obs, idx, noise);
    require_finite(innov, "innovation");
    const Eigen::MatrixXd rhs = rinv_y.transpose() * innov;

    Eigen::LLT<Eigen::MatrixXd> llt(system);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::linear_solve_failure, "ensemble-space system is not SPD");
    }
    const Eigen::MatrixXd z = llt.solve(rhs);
    x += a * z;
    require_finite(x, "analysis ensemble");
    return to_blocks(x, shape);
}

std::vector<BlockState> dense_analysis_with_covariance(std::span<const BlockState> members,
                                                       const Eigen::MatrixXd& covariance,
                                                       const Observation& obs,
                                                       const Perturbations& noise)
{
    check_members(members);
    const BlockState& shape = members.front();
    check_observation(obs, shape, noise, members.size());
    const ObservedIndex idx = observed_index(obs, shape);

    Eigen::MatrixXd x = member_matrix(members);
    if (covariance.rows() != x.rows() || covariance.cols() != x.rows()) {
        throw Error(ErrorCode::shape_mismatch, "covariance does not match the state dimension");
    }
    const auto m = static_cast<Eigen::Index>(idx.rows.size());

    Eigen::MatrixXd c_ht(x.rows(), m);   // C H^T
    for (Eigen::Index c = 0; c < m; ++c) {
        c_ht.col(c) = covariance.col(idx.rows[static_cast<std::size_t>(c)]);
    }
    Eigen::MatrixXd h_c_ht(m, m);        // H C H^T + R
    for (Eigen::Index r = 0; r < m; ++r) {
        h_c_ht.row(r) = c_ht.row(idx.rows[static_cast<std::size_t>(r)]);
    }
    h_c_ht.diagonal() += idx.variance;

    const Eigen::MatrixXd innov = innovations(x, obs, idx, noise);
    Eigen::LLT<Eigen::MatrixXd> llt(h_c_ht);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::linear_solve_failure, "H C H^T + R is not SPD");
    }
    x += c_ht * llt.solve(innov);
    require_finite(x, "analysis ensemble");
    return to_blocks(x, shape);
}

std::vector<BlockState> member_blocks(const Ensemble& ens)
{
    std::vector<BlockState> out;
    out.reserve(ens.members.size());
    for (const auto& m : ens.members) {
        out.push_back(m.blocks());
    }
    return out;
}

Ensemble with_member_blocks(const Ensemble& ens, const std::vector<BlockState>& blocks)
{
    Ensemble out = ens;
    for (std::size_t k = 0; k < out.members.size(); ++k) {
        out.members[k].set_blocks(blocks[k]);
    }
    return out;
}

Ensemble dense_analysis(const Ensemble& ens, const ObsSpec& obs, RandomStream& rng)
{
    const auto blocks = member_blocks(ens);
    const Observation o = Observation::from(obs);
    const Perturbations noise = draw_perturbations(o, blocks.size(), rng);
    return with_member_blocks(ens, dense_analysis(blocks, o, noise));
}

} // namespace epienkf
