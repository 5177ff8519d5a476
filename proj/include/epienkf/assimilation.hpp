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

#ifndef EPIENKF_ASSIMILATION_HPP
#define EPIENKF_ASSIMILATION_HPP

#include "epienkf/grid.hpp"
#include "epienkf/morphing.hpp"
#include "epienkf/random.hpp"
#include "epienkf/sir_model.hpp"
#include "epienkf/spectral.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace epienkf {

enum class FilterVariant { enkf, fft_enkf, morphing_enkf, morphing_fft_enkf };

std::string_view to_string(FilterVariant v) noexcept;
std::optional<FilterVariant> parse_variant(std::string_view name) noexcept;
bool is_morphing(FilterVariant v) noexcept;

/// Smooth positive population surrogate: a base density plus Gaussian blobs
/// at seeded random positions. Densities in people per km^2.
struct PopulationSpec {
    double base_density = 10.0;
    std::size_t blob_count = 4;
    double blob_density = 10.0;
    double blob_radius = 120.0;   ///< km, Gaussian standard deviation
};

struct ExperimentConfig {
    // grid
    std::size_t nx = 100;
    std::size_t ny = 100;
    double dx = 10.0;
    double dy = 10.0;

    EpiParams epi;
    PopulationSpec population;

    // outbreak seed
    double outbreak_x = 400.0;    ///< km
    double outbreak_y = 550.0;    ///< km
    double initial_infected = 50.0;

    // protocol
    std::size_t n_ensemble = 5;
    std::size_t spinup_steps = 100;
    std::size_t cycle_steps = 20;
    std::size_t n_cycles = 3;
    FilterVariant variant = FilterVariant::morphing_fft_enkf;

    // initial perturbation
    SmoothnessSpec warp_spec{1200.0, 0.6};     ///< km, about 25 km largest displacement
    SmoothnessSpec amplitude_spec{12.0, 0.6};  ///< about 8% rms amplitude change
    InitialPerturbation perturbation_mode = InitialPerturbation::multiplicative;

    // observation
    bool auto_tune = true;
    double obs_variance = 1e-2;         ///< infected fraction^2, plain variants
    double position_variance = 100.0;   ///< km^2
    std::optional<double> amplitude_variance;
    double amplitude_variance_factor = 1e6;

    double threshold = 0.01;
    RegistrationOptions registration;

    std::uint64_t seed = 20100;
    int lanes = 1;

    Grid grid() const;
};

/// Throws Error(validation_error) naming the offending field.
void validate(const ExperimentConfig& config);

struct CycleReport {
    std::size_t cycle = 0;
    double time = 0.0;
    FieldBlock forecast_mean;    ///< infected, people per cell
    FieldBlock data;             ///< infected, people per cell
    FieldBlock analysis_mean;    ///< infected, people per cell
    double rmse_forecast = 0.0;  ///< vs data
    double rmse_analysis = 0.0;
    double centroid_error_forecast = 0.0;   ///< km
    double centroid_error_analysis = 0.0;   ///< km
    double centroid_shift = 0.0;            ///< km, forecast mean to analysis mean
    double obs_variance = 0.0;       ///< plain variants
    double position_variance = 0.0;  ///< morphing variants
    double amplitude_variance = 0.0; ///< morphing variants
    bool registration_warning = false;
    double wall_clock = 0.0;         ///< seconds spent in the cycle
};

FieldBlock make_population(const ExperimentConfig& config, RandomStream& rng);
ModelState initial_state(const ExperimentConfig& config, const FieldBlock& population);

/// Each block divided by the population; zero-population cells map to 0.
ModelState to_fraction(const ModelState& state, const FieldBlock& population);
/// Multiplies fractions back by the population.
ModelState from_fraction(const ModelState& state_fraction, const FieldBlock& population);

/**
 * Clip every block to [0, 1], zero infected fractions below `threshold`,
 * renormalize each cell so S + I + R = 1 (an all-zero cell becomes all
 * susceptible) and scale by the population. Per-cell people counts then
 * equal the population.
 */
ModelState postprocess(const ModelState& state_fraction, const FieldBlock& population, double threshold);

/// Distance in km between the intensity-weighted centroids of a and b.
/// Throws undefined_centroid when either field has no positive mass.
double centroid_error(const FieldBlock& a, const FieldBlock& b, const Grid& grid);
Point centroid(const FieldBlock& f, const Grid& grid);
double rmse(const FieldBlock& a, const FieldBlock& b);

/// Named substreams of the master seed.
struct SeedPlan {
    explicit SeedPlan(std::uint64_t master);

    RandomStream master;
    RandomStream population;
    RandomStream truth;
    RandomStream reference;
    RandomStream filter_noise;
    RandomStream member(std::size_t k) const;
};

/// Truth trajectory: spinup, perturbation like a member, then one infected
/// frame per cycle (absolute units), cycle_steps apart.
std::vector<FieldBlock> synthesize_data(const ExperimentConfig& config, RandomStream& rng);

/// Mutable state carried between cycles of one experiment.
struct CycleContext {
    FieldBlock population;
    std::optional<double> obs_variance;
    std::optional<double> position_variance;
    std::vector<RandomStream> member_rngs;   ///< one per member
    RandomStream reference_rng{0};
};

/// Filter, postprocess, report and advance. `data` is in people per cell.
std::pair<Ensemble, CycleReport> run_cycle(const Ensemble& ens, const FieldBlock& data,
                                           const ExperimentConfig& config, CycleContext& ctx,
                                           RandomStream& rng, std::size_t cycle_index = 1);

struct ExperimentResult {
    FieldBlock population;
    ModelState spinup_reference;
    Ensemble initial;
    std::vector<FieldBlock> data;
    std::vector<CycleReport> reports;
    double spinup_seconds = 0.0;
};

using CycleCallback = std::function<void(const CycleReport&)>;

/// Full twin experiment. `on_cycle` runs after each cycle so callers can
/// flush partial output.
ExperimentResult run_experiment(const ExperimentConfig& config, const CycleCallback& on_cycle = {});

} // namespace epienkf

#endif // EPIENKF_ASSIMILATION_HPP
