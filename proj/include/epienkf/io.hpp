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

#ifndef EPIENKF_IO_HPP
#define EPIENKF_IO_HPP

#include "epienkf/assimilation.hpp"
#include "epienkf/grid.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace epienkf {

inline constexpr std::string_view artifact_version = "0.1.0";

/**
 * Parses an INI-style document:
 *
 *   [ensemble]
 *   n_ensemble = 5
 *
 * Omitted keys keep their defaults. A key outside any section is accepted
 * when its name is unique across sections. Unknown keys are rejected.
 * Errors: Error(parse_error) with line or key context, Error(validation_error)
 * naming the field.
 */
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical text form; parse_config(format_config(c)) reproduces c.
std::string format_config(const ExperimentConfig& config);

/// Field with the grid spacing it was written with.
struct FieldFile {
    FieldBlock field;
    double dx = 1.0;
    double dy = 1.0;
};

/**
 * CSV layout:
 *
 *   nx,ny,dx,dy
 *   <nx>,<ny>,<dx>,<dy>
 *   f(0,0),f(0,1),...,f(0,ny-1)
 *   ...
 *
 * one line per x index, numbers in shortest round-trip form, so reading back
 * is bit-exact.
 */
void write_field_csv(const FieldBlock& field, double dx, double dy, const std::filesystem::path& path);
FieldFile read_field_csv(const std::filesystem::path& path);
std::string format_field_csv(const FieldBlock& field, double dx, double dy);
FieldFile parse_field_csv(std::string_view text);

/**
 * Binary 16-bit PGM (P5, maxval 65535, big-endian). Width nx, height ny, top
 * row is the largest y. Values are min-max scaled; the scale is recorded as
 * "# scale min <min> max <max>". A constant field maps to all zeros.
 */
void write_field_pgm(const FieldBlock& field, const std::filesystem::path& path);
std::string format_field_pgm(const FieldBlock& field);

/// Deterministic per-cycle metrics (no timings), JSON.
std::string format_reports(const std::vector<CycleReport>& reports);

struct ManifestInfo {
    std::string command;
    ExperimentConfig config;
    std::vector<std::string> outputs;
    double spinup_seconds = 0.0;
    std::vector<double> cycle_seconds;
};

/// Config echo, master and per-stream seeds, outputs and timings, JSON.
std::string format_manifest(const ManifestInfo& info);

namespace cli {

/// Entry point of the command-line tool: simulate, synthesize, assimilate,
/// diagnose. Returns the process exit status.
int main(int argc, const char* const* argv);

} // namespace cli

} // namespace epienkf

#endif // EPIENKF_IO_HPP
