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
#include "epienkf/io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

namespace epienkf {

namespace {

std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected)
{
    throw Error(ErrorCode::parse_error, "key " + key + ": cannot read '" + value + "' as " + expected);
}

double to_double(const std::string& key, const std::string& value)
{
    double v = 0.0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
        bad_value(key, value, "a number");
    }
    return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& value)
{
    std::uint64_t v = 0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
        bad_value(key, value, "a nonnegative integer");
    }
    return v;
}

long long to_int(const std::string& key, const std::string& value)
{
    long long v = 0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
        bad_value(key, value, "an integer");
    }
    return v;
}

std::size_t to_count(const std::string& key, const std::string& value)
{
    const long long v = to_int(key, value);
    if (v < 0) {
        throw Error(ErrorCode::validation_error, key + ": must be >= 0");
    }
    return static_cast<std::size_t>(v);
}

bool to_bool(const std::string& key, const std::string& value)
{
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    bad_value(key, value, "a boolean");
}

struct Key {
    std::string section;
    std::string name;
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string& full, const std::string&)> set;
};

#define EPIENKF_DOUBLE_KEY(sec, nm, member)                                                      \
    Key{sec, nm, [](const ExperimentConfig& c) { return format_double(c.member); },              \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.member = to_double(k, v); }}
#define EPIENKF_COUNT_KEY(sec, nm, member)                                                       \
    Key{sec, nm, [](const ExperimentConfig& c) { return std::to_string(c.member); },             \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.member = to_count(k, v); }}

const std::vector<Key>& keys()
{
    static const std::vector<Key> table = {
        EPIENKF_COUNT_KEY("grid", "nx", nx),
        EPIENKF_COUNT_KEY("grid", "ny", ny),
        EPIENKF_DOUBLE_KEY("grid", "dx", dx),
        EPIENKF_DOUBLE_KEY("grid", "dy", dy),
        EPIENKF_DOUBLE_KEY("epi", "alpha", epi.alpha),
        EPIENKF_DOUBLE_KEY("epi", "lambda", epi.lambda),
        EPIENKF_DOUBLE_KEY("epi", "q", epi.q),
        EPIENKF_DOUBLE_KEY("epi", "dt", epi.dt),
        EPIENKF_DOUBLE_KEY("epi", "cutoff_radius", epi.cutoff_radius),
        EPIENKF_DOUBLE_KEY("population", "base_density", population.base_density),
        EPIENKF_COUNT_KEY("population", "blob_count", population.blob_count),
        EPIENKF_DOUBLE_KEY("population", "blob_density", population.blob_density),
        EPIENKF_DOUBLE_KEY("population", "blob_radius", population.blob_radius),
        EPIENKF_DOUBLE_KEY("outbreak", "x", outbreak_x),
        EPIENKF_DOUBLE_KEY("outbreak", "y", outbreak_y),
        EPIENKF_DOUBLE_KEY("outbreak", "initial_infected", initial_infected),
        EPIENKF_COUNT_KEY("ensemble", "n_ensemble", n_ensemble),
        EPIENKF_COUNT_KEY("ensemble", "spinup_steps", spinup_steps),
        EPIENKF_COUNT_KEY("ensemble", "cycle_steps", cycle_steps),
        EPIENKF_COUNT_KEY("ensemble", "n_cycles", n_cycles),
        Key{"ensemble", "variant", [](const ExperimentConfig& c) { return std::string(to_string(c.variant)); },
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                const auto parsed = parse_variant(v);
                if (!parsed) {
                    bad_value(k, v, "one of enkf, fft_enkf, morphing_enkf, morphing_fft_enkf");
                }
                c.variant = *parsed;
            }},
        EPIENKF_DOUBLE_KEY("perturbation", "warp_amplitude", warp_spec.amplitude),
        EPIENKF_DOUBLE_KEY("perturbation", "warp_decay", warp_spec.decay),
        EPIENKF_DOUBLE_KEY("perturbation", "amplitude_amplitude", amplitude_spec.amplitude),
        EPIENKF_DOUBLE_KEY("perturbation", "amplitude_decay", amplitude_spec.decay),
        Key{"perturbation", "mode",
            [](const ExperimentConfig& c) {
                return std::string(c.perturbation_mode == InitialPerturbation::multiplicative ? "multiplicative"
                                                                                                : "residual");
            },
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                if (v == "multiplicative") {
                    c.perturbation_mode = InitialPerturbation::multiplicative;
                } else if (v == "residual") {
                    c.perturbation_mode = InitialPerturbation::residual;
                } else {
                    bad_value(k, v, "multiplicative or residual");
                }
            }},
        Key{"observation", "auto_tune", [](const ExperimentConfig& c) { return std::string(c.auto_tune ? "true" : "false"); },
            [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.auto_tune = to_bool(k, v); }},
        EPIENKF_DOUBLE_KEY("observation", "obs_variance", obs_variance),
        EPIENKF_DOUBLE_KEY("observation", "position_variance", position_variance),
        Key{"observation", "amplitude_variance",
            [](const ExperimentConfig& c) {
                return c.amplitude_variance ? format_double(*c.amplitude_variance) : std::string("auto");
            },
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                if (v == "auto" || v.empty()) {
                    c.amplitude_variance.reset();
                } else {
                    c.amplitude_variance = to_double(k, v);
                }
            }},
        EPIENKF_DOUBLE_KEY("observation", "amplitude_variance_factor", amplitude_variance_factor),
        EPIENKF_DOUBLE_KEY("observation", "threshold", threshold),
        EPIENKF_COUNT_KEY("registration", "levels", registration.levels),
        EPIENKF_DOUBLE_KEY("registration", "smoothness_weight", registration.smoothness_weight),
        EPIENKF_DOUBLE_KEY("registration", "gradient_weight", registration.gradient_weight),
        EPIENKF_COUNT_KEY("registration", "max_iters", registration.max_iters),
        EPIENKF_DOUBLE_KEY("registration", "step_tolerance", registration.step_tolerance),
        EPIENKF_COUNT_KEY("registration", "sweeps", registration.sweeps),
        Key{"run", "seed", [](const ExperimentConfig& c) { return std::to_string(c.seed); },
            [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.seed = to_u64(k, v); }},
        Key{"run", "lanes", [](const ExperimentConfig& c) { return std::to_string(c.lanes); },
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                c.lanes = static_cast<int>(to_int(k, v));
            }},
    };
    return table;
}

#undef EPIENKF_DOUBLE_KEY
#undef EPIENKF_COUNT_KEY

const Key* find_key(const std::string& section, const std::string& name)
{
    const Key* found = nullptr;
    for (const auto& k : keys()) {
        if (k.name != name) {
            continue;
        }
        if (!section.empty()) {
            if (k.section == section) {
                return &k;
            }
            continue;
        }
        if (found) {
            throw Error(ErrorCode::parse_error, "key " + name + " is ambiguous outside a section");
        }
        found = &k;
    }
    return found;
}

std::string trimmed(std::string s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

} // namespace

ExperimentConfig parse_config(std::string_view text)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in{std::string(text)};
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw Error(ErrorCode::parse_error,
                    "line " + std::to_string(e.line()) + ": " + e.message());
    }

    ExperimentConfig config;
    auto apply = [&](const std::string& section, const std::string& name, const std::string& value) {
        const Key* key = find_key(section, name);
        const std::string full = section.empty() ? name : section + "." + name;
        if (!key) {
            throw Error(ErrorCode::parse_error, "unknown key " + full);
        }
        key->set(config, key->section + "." + key->name, trimmed(value));
    };
    for (const auto& [name, node] : tree) {
        if (node.empty()) {
            apply("", name, node.data());
            continue;
        }
        for (const auto& [key, leaf] : node) {
            if (!leaf.empty()) {
                throw Error(ErrorCode::parse_error, "nested sections are not supported: " + name + "." + key);
            }
            apply(name, key, leaf.data());
        }
    }
    validate(config);
    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::io_error, "cannot open config " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string format_config(const ExperimentConfig& config)
{
    std::ostringstream out;
    std::string section;
    for (const auto& k : keys()) {
        if (k.section != section) {
            if (!section.empty()) {
                out << '\n';
            }
            section = k.section;
            out << '[' << section << "]\n";
        }
        out << k.name << " = " << k.get(config) << '\n';
    }
    return out.str();
}

} // namespace epienkf
