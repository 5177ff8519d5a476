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

#include "epienkf/io.hpp"

#include "epienkf/error.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>

namespace epienkf {

namespace {

void append_double(std::string& out, double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::io_error, "cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes)
{
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error(ErrorCode::io_error, "cannot write " + path.string());
    }
}

std::vector<std::string_view> split(std::string_view line, char sep)
{
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        parts.push_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return parts;
}

template <class T>
bool parse_number(std::string_view s, T& out)
{
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) {
        s.remove_suffix(1);
    }
    while (!s.empty() && s.front() == ' ') {
        s.remove_prefix(1);
    }
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

} // namespace

// ---------------------------------------------------------------------------
// CSV

std::string format_field_csv(const FieldBlock& field, double dx, double dy)
{
    std::string out = "nx,ny,dx,dy\n";
    out += std::to_string(field.nx()) + ',' + std::to_string(field.ny()) + ',';
    append_double(out, dx);
    out += ',';
    append_double(out, dy);
    out += '\n';
    for (std::size_t i = 0; i < field.nx(); ++i) {
        for (std::size_t j = 0; j < field.ny(); ++j) {
            if (j > 0) {
                out += ',';
            }
            append_double(out, field(i, j));
        }
        out += '\n';
    }
    return out;
}

FieldFile parse_field_csv(std::string_view text)
{
    std::vector<std::string_view> lines;
    for (auto line : split(text, '\n')) {
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        lines.push_back(line);
    }
    while (!lines.empty() && lines.back().empty()) {
        lines.pop_back();
    }
    if (lines.size() < 2 || lines[0] != "nx,ny,dx,dy") {
        throw Error(ErrorCode::malformed_header, "expected header line nx,ny,dx,dy");
    }
    const auto head = split(lines[1], ',');
    std::size_t nx = 0;
    std::size_t ny = 0;
    FieldFile file;
    if (head.size() != 4 || !parse_number(head[0], nx) || !parse_number(head[1], ny)
        || !parse_number(head[2], file.dx) || !parse_number(head[3], file.dy) || nx == 0 || ny == 0) {
        throw Error(ErrorCode::malformed_header, "bad dimension line '" + std::string(lines[1]) + "'");
    }
    if (lines.size() != nx + 2) {
        throw Error(ErrorCode::parse_error,
                    "expected " + std::to_string(nx) + " value rows, found " + std::to_string(lines.size() - 2));
    }
    file.field = FieldBlock(nx, ny);
    for (std::size_t i = 0; i < nx; ++i) {
        const auto cells = split(lines[i + 2], ',');
        if (cells.size() != ny) {
            throw Error(ErrorCode::parse_error, "line " + std::to_string(i + 3) + ": expected "
                                                    + std::to_string(ny) + " values");
        }
        for (std::size_t j = 0; j < ny; ++j) {
            if (!parse_number(cells[j], file.field(i, j))) {
                throw Error(ErrorCode::parse_error, "line " + std::to_string(i + 3) + ": bad value '"
                                                        + std::string(cells[j]) + "'");
            }
        }
    }
    return file;
}

void write_field_csv(const FieldBlock& field, double dx, double dy, const std::filesystem::path& path)
{
    write_file(path, format_field_csv(field, dx, dy));
}

FieldFile read_field_csv(const std::filesystem::path& path)
{
    return parse_field_csv(read_file(path));
}

// ---------------------------------------------------------------------------
// PGM

std::string format_field_pgm(const FieldBlock& field)
{
    const auto values = field.values();
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = values.empty() ? 0.0 : *lo_it;
    const double hi = values.empty() ? 0.0 : *hi_it;
    const double range = hi - lo;

    std::string out = "P5\n# scale min ";
    append_double(out, lo);
    out += " max ";
    append_double(out, hi);
    out += '\n' + std::to_string(field.nx()) + ' ' + std::to_string(field.ny()) + "\n65535\n";
    out.reserve(out.size() + 2 * values.size());
    for (std::size_t row = 0; row < field.ny(); ++row) {
        const std::size_t j = field.ny() - 1 - row;
        for (std::size_t i = 0; i < field.nx(); ++i) {
            std::uint16_t px = 0;
            if (range > 0.0 && std::isfinite(range)) {
                px = static_cast<std::uint16_t>(std::lround((field(i, j) - lo) / range * 65535.0));
            }
            out += static_cast<char>(px >> 8);
            out += static_cast<char>(px & 0xff);
        }
    }
    return out;
}

void write_field_pgm(const FieldBlock& field, const std::filesystem::path& path)
{
    write_file(path, format_field_pgm(field));
}

// ---------------------------------------------------------------------------
// JSON

std::string format_reports(const std::vector<CycleReport>& reports)
{
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
        nlohmann::ordered_json j;
        j["cycle"] = r.cycle;
        j["time"] = r.time;
        j["rmse_forecast"] = r.rmse_forecast;
        j["rmse_analysis"] = r.rmse_analysis;
        j["centroid_error_forecast_km"] = r.centroid_error_forecast;
        j["centroid_error_analysis_km"] = r.centroid_error_analysis;
        j["centroid_shift_km"] = r.centroid_shift;
        j["obs_variance"] = r.obs_variance;
        j["position_variance"] = r.position_variance;
        j["amplitude_variance"] = r.amplitude_variance;
        j["registration_warning"] = r.registration_warning;
        arr.push_back(std::move(j));
    }
    return arr.dump(2) + '\n';
}

std::string format_manifest(const ManifestInfo& info)
{
    const SeedPlan seeds(info.config.seed);
    nlohmann::ordered_json j;
    j["artifact_version"] = artifact_version;
    j["command"] = info.command;
    j["master_seed"] = info.config.seed;
    j["lanes"] = info.config.lanes;
    nlohmann::ordered_json streams;
    streams["population"] = seeds.population.seed();
    streams["truth"] = seeds.truth.seed();
    streams["reference"] = seeds.reference.seed();
    streams["filter_noise"] = seeds.filter_noise.seed();
    for (std::size_t k = 0; k < info.config.n_ensemble; ++k) {
        streams["member_" + std::to_string(k + 1)] = seeds.member(k).seed();
    }
    j["stream_seeds"] = streams;
    j["config"] = format_config(info.config);
    j["outputs"] = info.outputs;
    nlohmann::ordered_json timing;
    timing["spinup_seconds"] = info.spinup_seconds;
    timing["cycle_seconds"] = info.cycle_seconds;
    j["wall_clock"] = timing;
    return j.dump(2) + '\n';
}

// ---------------------------------------------------------------------------
// CLI

namespace cli {

namespace {

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string variant;
    std::string out = "out";
    std::optional<int> lanes;
};

void add_common(CLI::App& sub, CommonOptions& o, bool with_variant)
{
    sub.add_option("--config", o.config_path, "configuration file (INI)");
    sub.add_option("--seed", o.seed, "master seed");
    sub.add_option("--out", o.out, "output directory")->capture_default_str();
    sub.add_option("--lanes", o.lanes, "worker lanes for the stochastic step; >1 changes the random streams");
    if (with_variant) {
        sub.add_option("--variant", o.variant, "enkf, fft_enkf, morphing_enkf, morphing_fft_enkf or all");
    }
}

ExperimentConfig resolve(const CommonOptions& o)
{
    ExperimentConfig config = o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path);
    if (o.seed) {
        config.seed = *o.seed;
    }
    if (o.lanes) {
        config.lanes = *o.lanes;
    }
    validate(config);
    return config;
}

std::string join_args(int argc, const char* const* argv)
{
    std::string s;
    for (int k = 0; k < argc; ++k) {
        if (k > 0) {
            s += ' ';
        }
        s += argv[k];
    }
    return s;
}

class Outputs {
public:
    Outputs(std::filesystem::path root, double dx, double dy) : root_(std::move(root)), dx_(dx), dy_(dy) {}

    void field(const std::filesystem::path& stem, const FieldBlock& f)
    {
        const auto rel_csv = std::filesystem::path(stem).concat(".csv");
        const auto rel_pgm = std::filesystem::path(stem).concat(".pgm");
        write_field_csv(f, dx_, dy_, root_ / rel_csv);
        write_field_pgm(f, root_ / rel_pgm);
        paths.push_back(rel_csv.generic_string());
        paths.push_back(rel_pgm.generic_string());
    }

    void text(const std::filesystem::path& rel, std::string_view bytes)
    {
        write_file(root_ / rel, bytes);
        paths.push_back(rel.generic_string());
    }

    const std::filesystem::path& root() const { return root_; }

    std::vector<std::string> paths;

private:
    std::filesystem::path root_;
    double dx_;
    double dy_;
};

void finish(Outputs& out, ManifestInfo info)
{
    info.outputs = out.paths;
    info.outputs.push_back("manifest.json");
    write_file(out.root() / "manifest.json", format_manifest(info));
}

int simulate(const CommonOptions& o, std::optional<std::size_t> steps, const std::string& command)
{
    const ExperimentConfig config = resolve(o);
    const auto started = std::chrono::steady_clock::now();
    SeedPlan seeds(config.seed);
    const FieldBlock pop = make_population(config, seeds.population);
    RandomStream rng = seeds.reference;
    const ModelState state
        = advance(initial_state(config, pop), steps.value_or(config.spinup_steps), config.epi, rng, config.lanes);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    Outputs out(o.out, config.dx, config.dy);
    out.field("population", pop);
    out.field("S", state.s);
    out.field("I", state.i);
    out.field("R", state.r);
    ManifestInfo info{command, config, {}, seconds, {}};
    finish(out, std::move(info));
    std::cout << "simulated " << config.nx << "x" << config.ny << " to t=" << state.time << " -> "
              << out.root().string() << '\n';
    return 0;
}

int synthesize(const CommonOptions& o, const std::string& command)
{
    const ExperimentConfig config = resolve(o);
    const auto started = std::chrono::steady_clock::now();
    SeedPlan seeds(config.seed);
    RandomStream rng = seeds.truth;
    const auto frames = synthesize_data(config, rng);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    Outputs out(o.out, config.dx, config.dy);
    for (std::size_t c = 0; c < frames.size(); ++c) {
        out.field(std::filesystem::path("cycle_" + std::to_string(c + 1)) / "data_I", frames[c]);
    }
    finish(out, ManifestInfo{command, config, {}, seconds, {}});
    std::cout << "wrote " << frames.size() << " truth frames -> " << out.root().string() << '\n';
    return 0;
}

int assimilate_one(ExperimentConfig config, const std::filesystem::path& root, const std::string& command)
{
    Outputs out(root, config.dx, config.dy);
    std::vector<double> cycle_seconds;
    std::vector<CycleReport> reports;
    const auto result = run_experiment(config, [&](const CycleReport& r) {
        const auto dir = std::filesystem::path("cycle_" + std::to_string(r.cycle));
        out.field(dir / "forecast_mean_I", r.forecast_mean);
        out.field(dir / "data_I", r.data);
        out.field(dir / "analysis_mean_I", r.analysis_mean);
        cycle_seconds.push_back(r.wall_clock);
        reports.push_back(r);
        write_file(out.root() / "reports.json", format_reports(reports));
    });
    out.text("reports.json", format_reports(result.reports));
    finish(out, ManifestInfo{command, config, {}, result.spinup_seconds, cycle_seconds});

    std::cout << to_string(config.variant) << ":";
    for (const auto& r : result.reports) {
        std::cout << " cycle " << r.cycle << " centroid " << r.centroid_error_forecast << " -> "
                  << r.centroid_error_analysis << " km, rmse " << r.rmse_forecast << " -> " << r.rmse_analysis
                  << ";";
    }
    std::cout << '\n';
    return 0;
}

int assimilate(const CommonOptions& o, const std::string& command)
{
    ExperimentConfig config = resolve(o);
    std::vector<FilterVariant> variants;
    if (o.variant == "all") {
        variants = {FilterVariant::enkf, FilterVariant::fft_enkf, FilterVariant::morphing_enkf,
                    FilterVariant::morphing_fft_enkf};
    } else if (!o.variant.empty()) {
        const auto v = parse_variant(o.variant);
        if (!v) {
            throw Error(ErrorCode::validation_error, "--variant: unknown variant '" + o.variant + "'");
        }
        variants = {*v};
    } else {
        variants = {config.variant};
    }
    for (const auto v : variants) {
        config.variant = v;
        assimilate_one(config, std::filesystem::path(o.out) / std::string(to_string(v)), command);
    }
    return 0;
}

int diagnose(const std::string& a_path, const std::string& b_path)
{
    const FieldFile a = read_field_csv(a_path);
    const FieldFile b = read_field_csv(b_path);
    if (!a.field.same_shape(b.field) || a.dx != b.dx || a.dy != b.dy) {
        throw Error(ErrorCode::shape_mismatch, "fields differ in shape or spacing");
    }
    const Grid grid = make_grid(a.field.nx(), a.field.ny(), a.dx, a.dy);
    nlohmann::ordered_json j;
    j["rmse"] = rmse(a.field, b.field);
    try {
        j["centroid_error_km"] = centroid_error(a.field, b.field, grid);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::undefined_centroid) {
            throw;
        }
        j["centroid_error_km"] = nullptr;
    }
    std::cout << j.dump() << '\n';
    return 0;
}

} // namespace

int main(int argc, const char* const* argv)
{
    CLI::App app{"epienkf: spatial epidemic data assimilation with morphing and spectral ensemble filters",
                 "epienkf"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(artifact_version));

    CommonOptions sim_o;
    CommonOptions syn_o;
    CommonOptions asm_o;
    std::optional<std::size_t> steps;
    std::string a_path;
    std::string b_path;

    auto* sim = app.add_subcommand("simulate", "spin up one model run and dump S, I, R");
    add_common(*sim, sim_o, false);
    sim->add_option("--steps", steps, "number of steps (default: spinup_steps)");
    auto* syn = app.add_subcommand("synthesize", "write the truth trajectory frames");
    add_common(*syn, syn_o, false);
    auto* asmb = app.add_subcommand("assimilate", "run the twin experiment and dump per-cycle fields");
    add_common(*asmb, asm_o, true);
    auto* dia = app.add_subcommand("diagnose", "RMSE and centroid error between two CSV fields");
    dia->add_option("a", a_path, "first field CSV")->required();
    dia->add_option("b", b_path, "second field CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << e.what() << '\n' << app.help();
        return 2;
    }

    const std::string command = join_args(argc, argv);
    try {
        if (sim->parsed()) {
            return simulate(sim_o, steps, command);
        }
        if (syn->parsed()) {
            return synthesize(syn_o, command);
        }
        if (asmb->parsed()) {
            return assimilate(asm_o, command);
        }
        return diagnose(a_path, b_path);
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << '\n';
    }
    return 1;
}

} // namespace cli

} // namespace epienkf
