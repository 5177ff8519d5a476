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

#include "epienkf/morphing.hpp"

#include "epienkf/error.hpp"
#include "epienkf/fft_enkf.hpp"
#include "epienkf/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace epienkf {

BlockState MorphState::to_blocks() const
{
    BlockState out;
    out.reserve(2 + residuals.size());
    out.push_back(warp.tx);
    out.push_back(warp.ty);
    out.insert(out.end(), residuals.begin(), residuals.end());
    return out;
}

MorphState MorphState::from_blocks(const BlockState& blocks)
{
    if (blocks.size() < 2) {
        throw Error(ErrorCode::shape_mismatch, "extended state needs at least the two warp blocks");
    }
    return MorphState{{blocks[0], blocks[1]}, BlockState(blocks.begin() + 2, blocks.end())};
}

void validate(const RegistrationOptions& opts)
{
    if (opts.levels < 1) {
        throw Error(ErrorCode::invalid_parameter, "registration levels must be >= 1");
    }
    if (!(opts.smoothness_weight >= 0.0) || !(opts.gradient_weight >= 0.0)) {
        throw Error(ErrorCode::invalid_parameter, "registration weights must be >= 0");
    }
    if (!(opts.step_tolerance > 0.0)) {
        throw Error(ErrorCode::invalid_parameter, "registration step tolerance must be > 0");
    }
}

FieldBlock warp(const FieldBlock& field, const WarpMapping& t, const Grid& grid)
{
    return kernels::warp_parallel(field, t, grid.dx(), grid.dy());
}

double min_jacobian(const WarpMapping& t, const Grid& grid)
{
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < t.tx.nx(); ++i) {
        for (std::size_t j = 0; j + 1 < t.tx.ny(); ++j) {
            const double txx = (t.tx(i + 1, j) - t.tx(i, j)) / grid.dx();
            const double txy = (t.tx(i, j + 1) - t.tx(i, j)) / grid.dy();
            const double tyx = (t.ty(i + 1, j) - t.ty(i, j)) / grid.dx();
            const double tyy = (t.ty(i, j + 1) - t.ty(i, j)) / grid.dy();
            m = std::min(m, (1.0 + txx) * (1.0 + tyy) - txy * tyx);
        }
    }
    return m;
}

double composition_defect(const WarpMapping& t, const WarpMapping& s, const Grid& grid)
{
    double worst = 0.0;
    for (std::size_t i = 0; i < t.tx.nx(); ++i) {
        for (std::size_t j = 0; j < t.tx.ny(); ++j) {
            const double fi = static_cast<double>(i) + s.tx(i, j) / grid.dx();
            const double fj = static_cast<double>(j) + s.ty(i, j) / grid.dy();
            const double ex = s.tx(i, j) + kernels::sample_bilinear(t.tx, fi, fj);
            const double ey = s.ty(i, j) + kernels::sample_bilinear(t.ty, fi, fj);
            worst = std::max({worst, std::fabs(ex) / grid.dx(), std::fabs(ey) / grid.dy()});
        }
    }
    return worst;
}

WarpMapping invert_mapping(const WarpMapping& t, const Grid& grid, double tolerance_cells,
                           std::size_t max_iters)
{
    if (!t.tx.matches(grid) || !t.ty.matches(grid)) {
        throw Error(ErrorCode::shape_mismatch, "mapping does not match the grid");
    }
    const double jac = min_jacobian(t, grid);
    if (!(jac > 0.0)) {
        throw Error(ErrorCode::non_invertible_mapping,
                    "mapping folds: minimum Jacobian determinant " + std::to_string(jac));
    }
    WarpMapping s = WarpMapping::zero(grid);
    for (std::size_t it = 0; it < max_iters; ++it) {
        if (composition_defect(t, s, grid) < tolerance_cells) {
            break;
        }
        // S <- -T o (I + S)
        WarpMapping next{-1.0 * warp(t.tx, s, grid), -1.0 * warp(t.ty, s, grid)};
        clear_boundary(next.tx);
        clear_boundary(next.ty);
        s = std::move(next);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Registration

namespace {

FieldBlock restrict_average(const FieldBlock& f)
{
    const std::size_t cx = (f.nx() + 1) / 2;
    const std::size_t cy = (f.ny() + 1) / 2;
    FieldBlock out(cx, cy);
    for (std::size_t i = 0; i < cx; ++i) {
        for (std::size_t j = 0; j < cy; ++j) {
            double acc = 0.0;
            int count = 0;
            for (std::size_t a = 2 * i; a < std::min(2 * i + 2, f.nx()); ++a) {
                for (std::size_t b = 2 * j; b < std::min(2 * j + 2, f.ny()); ++b) {
                    acc += f(a, b);
                    ++count;
                }
            }
            out(i, j) = acc / count;
        }
    }
    return out;
}

/// Coarse displacement (coarse cells) to fine displacement (fine cells).
FieldBlock prolong(const FieldBlock& coarse, std::size_t nx, std::size_t ny)
{
    FieldBlock out(nx, ny);
    for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t j = 0; j < ny; ++j) {
            const double fi = (static_cast<double>(i) - 0.5) / 2.0;
            const double fj = (static_cast<double>(j) - 0.5) / 2.0;
            out(i, j) = 2.0 * kernels::sample_bilinear(coarse, fi, fj);
        }
    }
    clear_boundary(out);
    return out;
}

struct Gradient {
    FieldBlock gx;
    FieldBlock gy;
};

Gradient gradient(const FieldBlock& f)
{
    Gradient g{FieldBlock(f.nx(), f.ny()), FieldBlock(f.nx(), f.ny())};
    const std::size_t nx = f.nx();
    const std::size_t ny = f.ny();
    for (std::size_t i = 0; i < nx; ++i) {
        const std::size_t lo = i == 0 ? 0 : i - 1;
        const std::size_t hi = i + 1 == nx ? i : i + 1;
        for (std::size_t j = 0; j < ny; ++j) {
            g.gx(i, j) = (f(hi, j) - f(lo, j)) / static_cast<double>(hi - lo);
        }
    }
    for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t j = 0; j < ny; ++j) {
            const std::size_t lo = j == 0 ? 0 : j - 1;
            const std::size_t hi = j + 1 == ny ? j : j + 1;
            g.gy(i, j) = (f(i, hi) - f(i, lo)) / static_cast<double>(hi - lo);
        }
    }
    return g;
}

/// One pyramid level in its own cell units (dx = dy = 1).
class LevelProblem {
public:
    LevelProblem(const FieldBlock& moving, const FieldBlock& reference, const RegistrationOptions& opts)
        : moving_(moving), reference_(reference), grad_(gradient(reference)), opts_(opts)
    {
    }

    double objective(const WarpMapping& t) const
    {
        const FieldBlock w = kernels::warp_serial(reference_, t, 1.0, 1.0);
        double data = 0.0;
        double size = 0.0;
        for (std::size_t k = 0; k < w.size(); ++k) {
            const double e = moving_[k] - w[k];
            data += e * e;
            size += t.tx[k] * t.tx[k] + t.ty[k] * t.ty[k];
        }
        return data + opts_.smoothness_weight * size + opts_.gradient_weight * roughness(t);
    }

    /// Minimizer of the linearized objective around t, relaxed in place.
    WarpMapping gauss_newton_step(const WarpMapping& t) const
    {
        const std::size_t nx = moving_.nx();
        const std::size_t ny = moving_.ny();
        const FieldBlock w = kernels::warp_serial(reference_, t, 1.0, 1.0);
        const FieldBlock gx = kernels::warp_serial(grad_.gx, t, 1.0, 1.0);
        const FieldBlock gy = kernels::warp_serial(grad_.gy, t, 1.0, 1.0);
        const double a = opts_.smoothness_weight;
        const double b = opts_.gradient_weight;

        // Per node: (g g^T + (a + 4b) I) v = g e + g g^T t + b sum_nb v_nb,
        // e = moving - warped reference. Boundary nodes stay zero.
        FieldBlock rhs_x(nx, ny);
        FieldBlock rhs_y(nx, ny);
        for (std::size_t k = 0; k < w.size(); ++k) {
            const double e = moving_[k] - w[k];
            const double gt = gx[k] * t.tx[k] + gy[k] * t.ty[k];
            rhs_x[k] = gx[k] * (e + gt);
            rhs_y[k] = gy[k] * (e + gt);
        }
        WarpMapping v = t;
        for (std::size_t sweep = 0; sweep < opts_.sweeps; ++sweep) {
            for (std::size_t i = 1; i + 1 < nx; ++i) {
                for (std::size_t j = 1; j + 1 < ny; ++j) {
                    const std::size_t k = i * ny + j;
                    const double nbx = v.tx(i - 1, j) + v.tx(i + 1, j) + v.tx(i, j - 1) + v.tx(i, j + 1);
                    const double nby = v.ty(i - 1, j) + v.ty(i + 1, j) + v.ty(i, j - 1) + v.ty(i, j + 1);
                    const double bx = rhs_x[k] + b * nbx;
                    const double by = rhs_y[k] + b * nby;
                    const double diag = a + 4.0 * b;
                    const double m11 = gx[k] * gx[k] + diag;
                    const double m22 = gy[k] * gy[k] + diag;
                    const double m12 = gx[k] * gy[k];
                    const double det = m11 * m22 - m12 * m12;
                    if (det <= 0.0) {
                        continue;
                    }
                    v.tx[k] = (m22 * bx - m12 * by) / det;
                    v.ty[k] = (m11 * by - m12 * bx) / det;
                }
            }
        }
        return v;
    }

private:
    static double roughness(const WarpMapping& t)
    {
        double acc = 0.0;
        for (const FieldBlock* f : {&t.tx, &t.ty}) {
            for (std::size_t i = 0; i < f->nx(); ++i) {
                for (std::size_t j = 0; j < f->ny(); ++j) {
                    if (i + 1 < f->nx()) {
                        const double d = (*f)(i + 1, j) - (*f)(i, j);
                        acc += d * d;
                    }
                    if (j + 1 < f->ny()) {
                        const double d = (*f)(i, j + 1) - (*f)(i, j);
                        acc += d * d;
                    }
                }
            }
        }
        return acc;
    }

    const FieldBlock& moving_;
    const FieldBlock& reference_;
    Gradient grad_;
    const RegistrationOptions& opts_;
};

double max_step(const WarpMapping& a, const WarpMapping& b)
{
    return std::max(max_abs_diff(a.tx, b.tx), max_abs_diff(a.ty, b.ty));
}

WarpMapping blend(const WarpMapping& from, const WarpMapping& to, double theta)
{
    WarpMapping out = from;
    for (std::size_t k = 0; k < out.tx.size(); ++k) {
        out.tx[k] += theta * (to.tx[k] - from.tx[k]);
        out.ty[k] += theta * (to.ty[k] - from.ty[k]);
    }
    return out;
}

constexpr double min_registration_jacobian = 0.1;

struct LevelOutcome {
    WarpMapping warp;
    double objective;
    bool warning;
};

LevelOutcome solve_level(const FieldBlock& moving, const FieldBlock& reference, WarpMapping t,
                         const RegistrationOptions& opts)
{
    const LevelProblem problem(moving, reference, opts);
    const Grid cells = make_grid(moving.nx(), moving.ny(), 1.0, 1.0);
    // A prolonged start can fold on the finer grid; shrink it until it does not.
    for (int halving = 0; min_jacobian(t, cells) <= min_registration_jacobian; ++halving) {
        if (halving == 8) {
            t = WarpMapping{FieldBlock(moving.nx(), moving.ny()), FieldBlock(moving.nx(), moving.ny())};
            break;
        }
        t.tx *= 0.5;
        t.ty *= 0.5;
    }
    double j_current = problem.objective(t);
    bool converged = false;
    for (std::size_t it = 0; it < opts.max_iters; ++it) {
        const WarpMapping candidate = problem.gauss_newton_step(t);
        double theta = 1.0;
        bool accepted = false;
        for (int backtrack = 0; backtrack < 6; ++backtrack, theta *= 0.5) {
            WarpMapping trial = theta == 1.0 ? candidate : blend(t, candidate, theta);
            const double j_trial = problem.objective(trial);
            // Steps that fold the mapping are rejected so the result stays invertible.
            if (j_trial < j_current && min_jacobian(trial, cells) > min_registration_jacobian) {
                const double step = max_step(trial, t);
                t = std::move(trial);
                j_current = j_trial;
                accepted = true;
                converged = step < opts.step_tolerance;
                break;
            }
        }
        if (!accepted) {
            // No descent along the Gauss-Newton direction: treat as a stationary point.
            converged = true;
        }
        if (converged) {
            break;
        }
    }
    return {std::move(t), j_current, !converged};
}

FieldBlock normalized(const FieldBlock& f)
{
    double peak = 0.0;
    for (double v : f.values()) {
        peak = std::max(peak, v);
    }
    if (!(peak > 0.0) || !std::isfinite(peak)) {
        return FieldBlock(f.nx(), f.ny());
    }
    return (1.0 / peak) * f;
}

bool has_positive(const FieldBlock& f)
{
    return std::any_of(f.values().begin(), f.values().end(), [](double v) { return v > 0.0; });
}

} // namespace

RegistrationResult register_field(const FieldBlock& moving, const FieldBlock& reference,
                                  const Grid& grid, const RegistrationOptions& opts)
{
    validate(opts);
    if (!moving.matches(grid) || !reference.matches(grid)) {
        throw Error(ErrorCode::shape_mismatch, "registration fields do not match the grid");
    }
    if (!has_positive(moving) || !has_positive(reference)) {
        return RegistrationResult{WarpMapping::zero(grid), 0.0, false};
    }

    std::vector<FieldBlock> mov{normalized(moving)};
    std::vector<FieldBlock> ref{normalized(reference)};
    while (mov.size() < opts.levels && mov.back().nx() >= 8 && mov.back().ny() >= 8) {
        mov.push_back(restrict_average(mov.back()));
        ref.push_back(restrict_average(ref.back()));
    }

    WarpMapping t{FieldBlock(mov.back().nx(), mov.back().ny()), FieldBlock(mov.back().nx(), mov.back().ny())};
    bool warning = false;
    double objective = 0.0;
    for (std::size_t level = mov.size(); level-- > 0;) {
        if (t.tx.nx() != mov[level].nx() || t.tx.ny() != mov[level].ny()) {
            t = WarpMapping{prolong(t.tx, mov[level].nx(), mov[level].ny()),
                            prolong(t.ty, mov[level].nx(), mov[level].ny())};
        }
        LevelOutcome outcome = solve_level(mov[level], ref[level], std::move(t), opts);
        t = std::move(outcome.warp);
        objective = outcome.objective;
        warning = warning || (level == 0 && outcome.warning);
    }

    // Cells to km.
    t.tx *= grid.dx();
    t.ty *= grid.dy();
    clear_boundary(t.tx);
    clear_boundary(t.ty);
    return RegistrationResult{std::move(t), objective, warning};
}

// ---------------------------------------------------------------------------
// Morphing transform

MorphState morph_transform(const ModelState& member, const ModelState& reference, const WarpMapping& t)
{
    if (!(member.grid == reference.grid)) {
        throw Error(ErrorCode::shape_mismatch, "member and reference live on different grids");
    }
    const WarpMapping inverse = invert_mapping(t, member.grid);
    MorphState out{t, {}};
    out.residuals.reserve(ModelState::block_count);
    for (std::size_t b = 0; b < ModelState::block_count; ++b) {
        out.residuals.push_back(warp(member.block(b), inverse, member.grid) - reference.block(b));
    }
    return out;
}

ModelState morph_inverse(const MorphState& m, const ModelState& reference)
{
    if (m.residuals.size() != ModelState::block_count) {
        throw Error(ErrorCode::shape_mismatch, "extended state needs 3 residual blocks");
    }
    ModelState out = reference;
    for (std::size_t b = 0; b < ModelState::block_count; ++b) {
        out.block(b) = warp(reference.block(b) + m.residuals[b], m.warp, reference.grid);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Initial ensemble

ModelState perturb_state(const ModelState& u, const SmoothnessSpec& warp_spec,
                         const SmoothnessSpec& amp_spec, RandomStream& rng, InitialPerturbation mode)
{
    const WarpMapping t = random_smooth_mapping(u.grid, warp_spec, rng);
    ModelState out = u;
    if (mode == InitialPerturbation::residual) {
        for (std::size_t b = 0; b < ModelState::block_count; ++b) {
            const FieldBlock r = random_smooth_field(u.grid, amp_spec, rng);
            out.block(b) = warp(u.block(b) + r, t, u.grid);
        }
        return out;
    }
    const FieldBlock s = random_smooth_field(u.grid, amp_spec, rng);
    for (std::size_t b = 0; b < ModelState::block_count; ++b) {
        FieldBlock f = warp(u.block(b), t, u.grid);
        for (std::size_t k = 0; k < f.size(); ++k) {
            f[k] *= std::max(1.0 + s[k], 1e-3);
        }
        out.block(b) = std::move(f);
    }
    return out;
}

Ensemble initial_ensemble(const ModelState& u, std::size_t n, const SmoothnessSpec& warp_spec,
                          const SmoothnessSpec& amp_spec, RandomStream& rng, InitialPerturbation mode)
{
    if (n < 2) {
        throw Error(ErrorCode::ensemble_too_small, "initial ensemble needs N >= 2");
    }
    Ensemble ens;
    ens.members.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        ens.members.push_back(perturb_state(u, warp_spec, amp_spec, rng, mode));
    }
    ens.reference = u;
    return ens;
}

// ---------------------------------------------------------------------------
// Morphing analysis

double spread_diagnostic(const std::vector<FieldBlock>& member_fields)
{
    if (member_fields.size() < 2) {
        throw Error(ErrorCode::ensemble_too_small, "spread needs at least 2 members");
    }
    for (const auto& f : member_fields) {
        if (!f.same_shape(member_fields.front())) {
            throw Error(ErrorCode::shape_mismatch, "member fields differ in shape");
        }
    }
    // Deviations from the first member, so identical members give exactly zero.
    const auto n = static_cast<double>(member_fields.size());
    const FieldBlock& first = member_fields.front();
    double s1 = 0.0;
    double s2 = 0.0;
    for (std::size_t k = 0; k < first.size(); ++k) {
        double d1 = 0.0;
        double d2 = 0.0;
        for (const auto& f : member_fields) {
            const double d = f[k] - first[k];
            d1 += d;
            d2 += d * d;
        }
        const double var = std::max(0.0, (d2 - d1 * d1 / n) / (n - 1.0));
        s1 += var;
        s2 += var * var;
    }
    return s1 > 0.0 ? s2 / s1 : 0.0;
}

namespace {

MorphState mean_state(const std::vector<BlockState>& states)
{
    BlockState mean;
    for (std::size_t b = 0; b < states.front().size(); ++b) {
        std::vector<FieldBlock> column;
        column.reserve(states.size());
        for (const auto& s : states) {
            column.push_back(s[b]);
        }
        mean.push_back(mean_field(column));
    }
    return MorphState::from_blocks(mean);
}

} // namespace

MorphingAnalysis morphing_analysis(const Ensemble& ens, const FieldBlock& data, FilterKind kind,
                                   const MorphingObsParams& obs, const RegistrationOptions& reg_opts,
                                   RandomStream& rng)
{
    if (!ens.reference) {
        throw Error(ErrorCode::invalid_parameter, "morphing analysis needs a reference member");
    }
    if (ens.members.size() < 2) {
        throw Error(ErrorCode::ensemble_too_small, "morphing analysis needs N >= 2");
    }
    if (obs.observed_block >= ModelState::block_count) {
        throw Error(ErrorCode::index_out_of_range, "observed block index out of range");
    }
    const ModelState& ref = *ens.reference;
    const Grid& grid = ref.grid;
    if (!data.matches(grid)) {
        throw Error(ErrorCode::shape_mismatch, "data does not match the grid");
    }
    const std::size_t n = ens.members.size();
    const FieldBlock& ref_obs = ref.block(obs.observed_block);

    // (1) registration of members (k = 1..N) and data (k = 0), (2) extended states.
    std::vector<RegistrationResult> reg(n + 1);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t kk = 0; kk <= static_cast<std::ptrdiff_t>(n); ++kk) {
        const auto k = static_cast<std::size_t>(kk);
        const FieldBlock& moving = k == 0 ? data : ens.members[k - 1].block(obs.observed_block);
        reg[k] = register_field(moving, ref_obs, grid, reg_opts);
    }
    bool warning = false;
    for (const auto& r : reg) {
        warning = warning || r.warning;
    }

    std::vector<BlockState> extended(n);
    for (std::size_t k = 0; k < n; ++k) {
        extended[k] = morph_transform(ens.members[k], ref, reg[k + 1].warp).to_blocks();
    }
    const WarpMapping data_warp = reg[0].warp;
    const WarpMapping data_inverse = invert_mapping(data_warp, grid);
    const FieldBlock data_residual = warp(data, data_inverse, grid) - ref_obs;

    // (3) filter on (tx, ty, r^(obs)).
    double position_variance = 0.0;
    if (obs.position_variance) {
        position_variance = *obs.position_variance;
    } else {
        std::vector<FieldBlock> tx;
        std::vector<FieldBlock> ty;
        for (const auto& e : extended) {
            tx.push_back(e[0]);
            ty.push_back(e[1]);
        }
        position_variance = 0.5 * (spread_diagnostic(tx) + spread_diagnostic(ty));
        if (!(position_variance > 0.0)) {
            position_variance = grid.dx() * grid.dx();
        }
    }
    double amplitude_variance = 0.0;
    if (obs.amplitude_variance) {
        amplitude_variance = *obs.amplitude_variance;
    } else {
        const double scale = max_abs(ref_obs);
        amplitude_variance = obs.amplitude_variance_factor * (scale > 0.0 ? scale * scale : 1.0);
    }

    Observation ext_obs;
    ext_obs.parts.push_back({0, position_variance, data_warp.tx});
    ext_obs.parts.push_back({1, position_variance, data_warp.ty});
    ext_obs.parts.push_back({2 + obs.observed_block, amplitude_variance, data_residual});
    const Perturbations noise = draw_perturbations(ext_obs, n, rng);

    std::vector<BlockState> analysis = kind == FilterKind::spectral
        ? fft_enkf_analysis(extended, ext_obs, noise)
        : dense_analysis(extended, ext_obs, noise);
    for (auto& a : analysis) {
        clear_boundary(a[0]);
        clear_boundary(a[1]);
    }

    // (4) new reference from the mean extended state, then back to model space.
    const MorphState forecast_mean = mean_state(extended);
    const MorphState analysis_ref = mean_state(analysis);

    Ensemble updated;
    updated.members.resize(n, ref);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t kk = 0; kk < static_cast<std::ptrdiff_t>(n); ++kk) {
        const auto k = static_cast<std::size_t>(kk);
        ModelState m = morph_inverse(MorphState::from_blocks(analysis[k]), ref);
        m.time = ens.members[k].time;
        updated.members[k] = std::move(m);
    }
    ModelState analysis_mean = morph_inverse(analysis_ref, ref);
    updated.reference = analysis_mean;
    return MorphingAnalysis{std::move(updated), morph_inverse(forecast_mean, ref), std::move(analysis_mean),
                            position_variance, amplitude_variance, warning, data_warp};
}

} // namespace epienkf
