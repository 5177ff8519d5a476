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

#include "epienkf/assimilation.hpp"

#include "epienkf/enkf.hpp"
#include "epienkf/error.hpp"
#include "epienkf/fft_enkf.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

namespace epienkf {

std::string_view to_string(FilterVariant v) noexcept
{
    switch (v) {
    case FilterVariant::enkf: return "enkf";
    case FilterVariant::fft_enkf: return "fft_enkf";
    case FilterVariant::morphing_enkf: return "morphing_enkf";
    case FilterVariant::morphing_fft_enkf: return "morphing_fft_enkf";
    }
    return "unknown";
}

std::optional<FilterVariant> parse_variant(std::string_view name) noexcept
{
    for (auto v : {FilterVariant::enkf, FilterVariant::fft_enkf, FilterVariant::morphing_enkf,
                   FilterVariant::morphing_fft_enkf}) {
        if (to_string(v) == name) {
            return v;
        }
    }
    return std::nullopt;
}

bool is_morphing(FilterVariant v) noexcept
{
    return v == FilterVariant::morphing_enkf || v == FilterVariant::morphing_fft_enkf;
}

Grid ExperimentConfig::grid() const { return make_grid(nx, ny, dx, dy); }

void validate(const ExperimentConfig& c)
{
    auto fail = [](const std::string& field, const std::string& why) {
        throw Error(ErrorCode::validation_error, field + ": " + why);
    };
    if (c.nx < 4) fail("grid.nx", "must be >= 4");
    if (c.ny < 4) fail("grid.ny", "must be >= 4");
    if (!(c.dx > 0.0)) fail("grid.dx", "must be > 0");
    if (!(c.dy > 0.0)) fail("grid.dy", "must be > 0");
    try {
        validate(c.epi);
    } catch (const Error& e) {
        fail("epi", e.what());
    }
    if (!(c.population.base_density >= 0.0)) fail("population.base_density", "must be >= 0");
    if (!(c.population.blob_density >= 0.0)) fail("population.blob_density", "must be >= 0");
    if (!(c.population.blob_radius > 0.0)) fail("population.blob_radius", "must be > 0");
    if (!(c.initial_infected >= 0.0)) fail("outbreak.initial_infected", "must be >= 0");
    if (c.n_ensemble < 2) fail("ensemble.n_ensemble", "must be >= 2");
    try {
        validate(c.warp_spec);
    } catch (const Error& e) {
        fail("perturbation.warp", e.what());
    }
    try {
        validate(c.amplitude_spec);
    } catch (const Error& e) {
        fail("perturbation.amplitude", e.what());
    }
    if (!(c.obs_variance > 0.0)) fail("observation.obs_variance", "must be > 0");
    if (!(c.position_variance > 0.0)) fail("observation.position_variance", "must be > 0");
    if (c.amplitude_variance && !(*c.amplitude_variance > 0.0)) {
        fail("observation.amplitude_variance", "must be > 0");
    }
    if (!(c.amplitude_variance_factor > 0.0)) fail("observation.amplitude_variance_factor", "must be > 0");
    if (!(c.threshold >= 0.0 && c.threshold < 1.0)) fail("observation.threshold", "must be in [0, 1)");
    try {
        validate(c.registration);
    } catch (const Error& e) {
        fail("registration", e.what());
    }
    if (c.lanes < 1) fail("run.lanes", "must be >= 1");
}

// ---------------------------------------------------------------------------
// Population and scaling

FieldBlock make_population(const ExperimentConfig& config, RandomStream& rng)
{
    const Grid grid = config.grid();
    const double width = static_cast<double>(grid.nx()) * grid.dx();
    const double height = static_cast<double>(grid.ny()) * grid.dy();
    std::vector<Point> centers;
    for (std::size_t b = 0; b < config.population.blob_count; ++b) {
        const double x = rng.uniform() * width;
        const double y = rng.uniform() * height;
        centers.push_back({x, y});
    }
    const double two_sigma2 = 2.0 * config.population.blob_radius * config.population.blob_radius;
    FieldBlock pop(grid);
    for (std::size_t i = 0; i < grid.nx(); ++i) {
        for (std::size_t j = 0; j < grid.ny(); ++j) {
            double density = config.population.base_density;
            for (const auto& c : centers) {
                const double dx = grid.center_x(i) - c.x;
                const double dy = grid.center_y(j) - c.y;
                density += config.population.blob_density * std::exp(-(dx * dx + dy * dy) / two_sigma2);
            }
            pop(i, j) = std::round(density * grid.cell_area());
        }
    }
    return pop;
}

ModelState initial_state(const ExperimentConfig& config, const FieldBlock& population)
{
    const Grid grid = config.grid();
    ModelState s = ModelState::zeros(grid);
    s.s = population;
    const auto ci = static_cast<std::size_t>(
        std::clamp(std::floor(config.outbreak_x / grid.dx()), 0.0, static_cast<double>(grid.nx() - 1)));
    const auto cj = static_cast<std::size_t>(
        std::clamp(std::floor(config.outbreak_y / grid.dy()), 0.0, static_cast<double>(grid.ny() - 1)));
    const double infected = std::min(config.initial_infected, population(ci, cj));
    s.i(ci, cj) = infected;
    s.s(ci, cj) -= infected;
    return s;
}

ModelState to_fraction(const ModelState& state, const FieldBlock& population)
{
    if (!population.matches(state.grid)) {
        throw Error(ErrorCode::shape_mismatch, "population does not match the grid");
    }
    ModelState out = state;
    for (std::size_t b = 0; b < ModelState::block_count; ++b) {
        FieldBlock& f = out.block(b);
        for (std::size_t k = 0; k < f.size(); ++k) {
            f[k] = population[k] > 0.0 ? f[k] / population[k] : 0.0;
        }
    }
    return out;
}

ModelState from_fraction(const ModelState& state_fraction, const FieldBlock& population)
{
    ModelState out = state_fraction;
    for (std::size_t b = 0; b < ModelState::block_count; ++b) {
        FieldBlock& f = out.block(b);
        for (std::size_t k = 0; k < f.size(); ++k) {
            f[k] *= population[k];
        }
    }
    return out;
}

ModelState postprocess(const ModelState& state_fraction, const FieldBlock& population, double threshold)
{
    if (!population.matches(state_fraction.grid)) {
        throw Error(ErrorCode::shape_mismatch, "population does not match the grid");
    }
    ModelState out = state_fraction;
    for (std::size_t k = 0; k < population.size(); ++k) {
        auto clip = [](double v) { return std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0; };
        double s = clip(out.s[k]);
        double i = clip(out.i[k]);
        double r = clip(out.r[k]);
        if (i < threshold) {
            i = 0.0;
        }
        const double total = s + i + r;
        if (total > 0.0) {
            s /= total;
            i /= total;
            r /= total;
        } else {
            s = 1.0;
            i = 0.0;
            r = 0.0;
        }
        const double p = population[k];
        out.s[k] = s * p;
        out.i[k] = i * p;
        out.r[k] = r * p;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Diagnostics

Point centroid(const FieldBlock& f, const Grid& grid)
{
    if (!f.matches(grid)) {
        throw Error(ErrorCode::shape_mismatch, "field does not match the grid");
    }
    double mass = 0.0;
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < grid.nx(); ++i) {
        for (std::size_t j = 0; j < grid.ny(); ++j) {
            const double w = f(i, j);
            mass += w;
            mx += w * grid.center_x(i);
            my += w * grid.center_y(j);
        }
    }
    if (!(mass > 0.0)) {
        throw Error(ErrorCode::undefined_centroid, "centroid of a field with no positive mass");
    }
    return {mx / mass, my / mass};
}

double centroid_error(const FieldBlock& a, const FieldBlock& b, const Grid& grid)
{
    const Point ca = centroid(a, grid);
    const Point cb = centroid(b, grid);
    return std::hypot(ca.x - cb.x, ca.y - cb.y);
}

double rmse(const FieldBlock& a, const FieldBlock& b)
{
    if (!a.same_shape(b)) {
        throw Error(ErrorCode::shape_mismatch, "rmse operands differ in shape");
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        acc += (a[k] - b[k]) * (a[k] - b[k]);
    }
    return std::sqrt(acc / static_cast<double>(a.size()));
}

// ---------------------------------------------------------------------------
// Experiment

SeedPlan::SeedPlan(std::uint64_t seed)
    : master(seed),
      population(master.split("population")),
      truth(master.split("truth")),
      reference(master.split("reference")),
      filter_noise(master.split("filter-noise"))
{
}

RandomStream SeedPlan::member(std::size_t k) const
{
    return master.split("member-" + std::to_string(k + 1));
}

namespace {

ModelState spun_up(const ExperimentConfig& config, const FieldBlock& population, RandomStream& rng)
{
    return advance(initial_state(config, population), config.spinup_steps, config.epi, rng, config.lanes);
}

/// Perturbation of a spun-up state, brought back onto the population raster.
ModelState perturbed(const ExperimentConfig& config, const ModelState& state, const FieldBlock& population,
                     RandomStream& rng)
{
    const ModelState p = perturb_state(state, config.warp_spec, config.amplitude_spec, rng,
                                       config.perturbation_mode);
    return postprocess(to_fraction(p, population), population, 0.0);
}

ModelState truth_start(const ExperimentConfig& config, const FieldBlock& population, RandomStream& rng)
{
    return perturbed(config, spun_up(config, population, rng), population, rng);
}

} // namespace

std::vector<FieldBlock> synthesize_data(const ExperimentConfig& config, RandomStream& rng)
{
    validate(config);
    SeedPlan seeds(config.seed);
    const FieldBlock population = make_population(config, seeds.population);
    ModelState truth = truth_start(config, population, rng);
    std::vector<FieldBlock> frames;
    frames.reserve(config.n_cycles);
    for (std::size_t c = 0; c < config.n_cycles; ++c) {
        if (c > 0) {
            truth = advance(truth, config.cycle_steps, config.epi, rng, config.lanes);
        }
        frames.push_back(truth.i);
    }
    return frames;
}

std::pair<Ensemble, CycleReport> run_cycle(const Ensemble& ens, const FieldBlock& data,
                                           const ExperimentConfig& config, CycleContext& ctx,
                                           RandomStream& rng, std::size_t cycle_index)
{
    const auto started = std::chrono::steady_clock::now();
    const Grid grid = config.grid();
    const FieldBlock& pop = ctx.population;
    if (!data.matches(grid) || ens.members.empty()) {
        throw Error(ErrorCode::shape_mismatch, "cycle inputs do not match the grid");
    }

    Ensemble frac;
    frac.members.reserve(ens.members.size());
    for (const auto& m : ens.members) {
        frac.members.push_back(to_fraction(m, pop));
    }
    if (ens.reference) {
        frac.reference = to_fraction(*ens.reference, pop);
    }
    FieldBlock data_frac(grid);
    for (std::size_t k = 0; k < data.size(); ++k) {
        data_frac[k] = pop[k] > 0.0 ? data[k] / pop[k] : 0.0;
    }

    CycleReport report;
    report.cycle = cycle_index;
    report.time = ens.members.front().time;
    report.data = data;

    Ensemble analysis_frac;
    ModelState forecast_mean_frac = ModelState::zeros(grid);
    std::optional<ModelState> analysis_mean_frac;

    if (is_morphing(config.variant)) {
        MorphingObsParams obs;
        obs.observed_block = 1;
        obs.position_variance = config.auto_tune ? ctx.position_variance : config.position_variance;
        obs.amplitude_variance = config.amplitude_variance;
        obs.amplitude_variance_factor = config.amplitude_variance_factor;
        const FilterKind kind = config.variant == FilterVariant::morphing_fft_enkf ? FilterKind::spectral
                                                                                   : FilterKind::dense;
        MorphingAnalysis ma = morphing_analysis(frac, data_frac, kind, obs, config.registration, rng);
        ctx.position_variance = ma.position_variance;
        report.position_variance = ma.position_variance;
        report.amplitude_variance = ma.amplitude_variance;
        report.registration_warning = ma.registration_warning;
        forecast_mean_frac = ma.forecast_mean;
        analysis_mean_frac = ma.analysis_mean;
        analysis_frac = std::move(ma.ensemble);
    } else {
        forecast_mean_frac = ensemble_mean(frac);
        double r = config.obs_variance;
        if (config.auto_tune) {
            if (!ctx.obs_variance) {
                std::vector<FieldBlock> infected;
                for (const auto& m : frac.members) {
                    infected.push_back(m.i);
                }
                const double spread = spread_diagnostic(infected);
                ctx.obs_variance = spread > 0.0 ? spread : config.obs_variance;
            }
            r = *ctx.obs_variance;
        }
        report.obs_variance = r;
        const ObsSpec obs{1, r, data_frac};
        analysis_frac = config.variant == FilterVariant::fft_enkf ? fft_enkf_analysis(frac, obs, rng)
                                                                  : dense_analysis(frac, obs, rng);
    }

    Ensemble analysis;
    analysis.members.reserve(analysis_frac.members.size());
    for (const auto& m : analysis_frac.members) {
        analysis.members.push_back(postprocess(m, pop, config.threshold));
    }
    if (analysis_frac.reference) {
        analysis.reference = postprocess(*analysis_frac.reference, pop, config.threshold);
    }

    report.forecast_mean = from_fraction(forecast_mean_frac, pop).i;
    if (analysis_mean_frac) {
        report.analysis_mean = postprocess(*analysis_mean_frac, pop, config.threshold).i;
    } else {
        report.analysis_mean = ensemble_mean(analysis).i;
    }
    report.rmse_forecast = rmse(report.forecast_mean, data);
    report.rmse_analysis = rmse(report.analysis_mean, data);
    auto safe_centroid_error = [&](const FieldBlock& a, const FieldBlock& b) {
        try {
            return centroid_error(a, b, grid);
        } catch (const Error&) {
            return std::nan("");
        }
    };
    report.centroid_error_forecast = safe_centroid_error(report.forecast_mean, data);
    report.centroid_error_analysis = safe_centroid_error(report.analysis_mean, data);
    report.centroid_shift = safe_centroid_error(report.forecast_mean, report.analysis_mean);

    // Advance members (one stream each) and the reference.
    const auto n = static_cast<std::ptrdiff_t>(analysis.members.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        auto& m = analysis.members[static_cast<std::size_t>(k)];
        m = advance(m, config.cycle_steps, config.epi, ctx.member_rngs[static_cast<std::size_t>(k)], 1);
    }
    if (analysis.reference) {
        analysis.reference = advance(*analysis.reference, config.cycle_steps, config.epi, ctx.reference_rng, 1);
    }

    report.wall_clock
        = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return {std::move(analysis), std::move(report)};
}

ExperimentResult run_experiment(const ExperimentConfig& config, const CycleCallback& on_cycle)
{
    validate(config);
    const auto started = std::chrono::steady_clock::now();
    SeedPlan seeds(config.seed);
    const FieldBlock pop = make_population(config, seeds.population);

    // Spinup: same initial condition, independent streams.
    CycleContext ctx;
    ctx.population = pop;
    ctx.reference_rng = seeds.reference;
    for (std::size_t k = 0; k < config.n_ensemble; ++k) {
        ctx.member_rngs.push_back(seeds.member(k));
    }
    ExperimentResult result{pop, spun_up(config, pop, ctx.reference_rng), {}, {}, {}, 0.0};

    std::vector<ModelState> members(config.n_ensemble, result.spinup_reference);
    const auto n = static_cast<std::ptrdiff_t>(config.n_ensemble);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        auto& rng = ctx.member_rngs[static_cast<std::size_t>(k)];
        const ModelState s = advance(initial_state(config, pop), config.spinup_steps, config.epi, rng, 1);
        members[static_cast<std::size_t>(k)] = perturbed(config, s, pop, rng);
    }
    result.initial.members = std::move(members);
    result.initial.reference = result.spinup_reference;

    RandomStream truth_rng = seeds.truth;
    ModelState truth = truth_start(config, pop, truth_rng);
    result.spinup_seconds
        = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    Ensemble ens = result.initial;
    for (std::size_t c = 0; c < config.n_cycles; ++c) {
        if (c > 0) {
            truth = advance(truth, config.cycle_steps, config.epi, truth_rng, config.lanes);
        }
        result.data.push_back(truth.i);
        RandomStream cycle_noise = seeds.filter_noise.split(static_cast<std::uint64_t>(c + 1));
        auto [next, report] = run_cycle(ens, truth.i, config, ctx, cycle_noise, c + 1);
        if (on_cycle) {
            on_cycle(report);
        }
        result.reports.push_back(std::move(report));
        ens = std::move(next);
    }
    return result;
}

} // namespace epienkf
