#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "sqpc/errors.hpp"
#include "sqpc/io.hpp"
#include "sqpc/schrodinger_poisson.hpp"
#include "sqpc/sweep.hpp"

#ifndef SQPC_VERSION
#define SQPC_VERSION "dev"
#endif

namespace fs = std::filesystem;
using namespace sqpc;

namespace {

struct Overrides {
    std::string config;
    std::optional<int> device;
    std::optional<double> delta0, bc;
    std::optional<std::string> model, out, interfaces;
};

void add_common(CLI::App* cmd, Overrides& o, bool transport) {
    cmd->add_option("-c,--config", o.config, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("--device", o.device, "preset device index (1-8)");
    cmd->add_option("--delta0", o.delta0, "superconducting gap, meV");
    cmd->add_option("--bc", o.bc, "critical field, T");
    cmd->add_option("--out", o.out, "output directory");
    if (transport) {
        cmd->add_option("--model", o.model, "analytic | bdg | series");
        cmd->add_option("--interfaces", o.interfaces, "one | two");
    }
}

io::LoadedConfig load(const Overrides& o) {
    io::LoadedConfig l = o.config.empty() ? io::default_loaded_config() : io::parse_config(o.config);
    if (!o.config.empty())
        for (const auto& key : l.defaults_applied) std::cerr << "default: " << key << "\n";
    auto& c = l.config;
    if (o.device) {
        const double Z = c.device.Z;
        const auto interfaces = c.device.interfaces;
        c.device = preset_device(*o.device);
        c.device.Z = Z;
        c.device.interfaces = interfaces;
        c.device_index = *o.device;
    }
    if (o.delta0) c.physics.delta_0 = *o.delta0;
    if (o.bc) c.physics.B_c = *o.bc;
    if (o.model) c.sweep.model = transport_model_from_string(*o.model);
    if (o.interfaces) {
        if (*o.interfaces == "one") c.device.interfaces = Interfaces::one;
        else if (*o.interfaces == "two") c.device.interfaces = Interfaces::two;
        else throw ConfigError("--interfaces must be one or two");
    }
    if (o.out) l.output.dir = *o.out;
    try {
        c.validate();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("validation error: ") + e.what());
    }
    return l;
}

std::string prepare_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
    return dir;
}

void record(const io::LoadedConfig& l, const std::string& dir, std::vector<std::string> outputs) {
    io::RunRecord r;
    r.config = io::config_to_json(l);
    r.version = SQPC_VERSION;
    r.timestamp = io::utc_timestamp();
    r.outputs = std::move(outputs);
    io::write_run_record(r, (fs::path(dir) / "run.json").string());
}

int run_params(const Overrides& o) {
    const auto l = load(o);
    std::cout << io::derived_to_json(l.config.derived()).dump(2) << "\n";
    return 0;
}

int run_band(const Overrides& o) {
    const auto l = load(o);
    const auto p = band::self_consistent_band(l.config.wafer, l.config.physics.temperature, l.band.mixing,
                                              l.band.tol, l.band.options);
    const auto dir = prepare_dir(l.output.dir);
    const auto csv = (fs::path(dir) / "band.csv").string();
    const auto summary = (fs::path(dir) / "band.json").string();
    io::write_band_csv(p, csv);
    io::write_json(io::band_summary(p), summary);
    record(l, dir, {csv, summary});
    std::cout << io::band_summary(p).dump(2) << "\n";
    return 0;
}

int run_trace(const Overrides& o, double B) {
    const auto l = load(o);
    const auto& c = l.config;
    const auto t = sweep::gate_sweep(c, c.sweep.model, B, c.sweep.gate);
    const auto report = sweep::analyze_trace(t, c.analysis);
    const auto dir = prepare_dir(l.output.dir);
    const auto csv = (fs::path(dir) / "trace.csv").string();
    const auto rep = (fs::path(dir) / "report.json").string();
    io::write_trace(t, csv);
    io::write_report(report, rep);
    record(l, dir, {csv, rep});
    std::cout << io::report_to_json(report).dump(2) << "\n";
    return 0;
}

int run_map(const Overrides& o) {
    const auto l = load(o);
    const auto& c = l.config;
    const auto m = sweep::field_gate_map(c, c.sweep.model, c.sweep.field, c.sweep.gate);
    io::json rows = io::json::array();
    for (std::size_t i = 0; i < m.B.size(); ++i) {
        auto j = io::report_to_json(sweep::analyze_trace(m.traces[i], c.analysis));
        rows.push_back({{"B", m.B[i]}, {"report", j}});
    }
    const auto dir = prepare_dir(l.output.dir);
    const auto csv = (fs::path(dir) / "map.csv").string();
    const auto rep = (fs::path(dir) / "map_report.json").string();
    io::write_map(m, csv);
    io::write_json(rows, rep);
    record(l, dir, {csv, rep});
    std::cout << rows.dump(2) << "\n";
    return 0;
}

int run_analyze(const Overrides& o, const std::string& csv) {
    const auto l = load(o);
    const auto t = io::read_trace(csv);
    const auto report = sweep::analyze_trace(t, l.config.analysis);
    if (o.out) {
        const auto dir = prepare_dir(*o.out);
        const auto rep = (fs::path(dir) / "report.json").string();
        io::write_report(report, rep);
        record(l, dir, {rep});
    }
    std::cout << io::report_to_json(report).dump(2) << "\n";
    return 0;
}

const char* error_kind(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return "config";
    if (dynamic_cast<const DomainError*>(&e)) return "domain";
    if (dynamic_cast<const ConvergenceError*>(&e)) return "convergence";
    if (dynamic_cast<const NumericError*>(&e)) return "numeric";
    if (dynamic_cast<const NotFoundError*>(&e)) return "not_found";
    if (dynamic_cast<const IoError*>(&e)) return "io";
    return "internal";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Split-gate superconducting QPC simulator", "sqpc"};
    app.set_version_flag("--version", SQPC_VERSION);
    app.require_subcommand(1);

    Overrides o;
    double field = 0.0;
    std::string csv;

    auto* params = app.add_subcommand("params", "print derived 2DEG parameters");
    add_common(params, o, false);
    auto* band = app.add_subcommand("band", "self-consistent band profile");
    add_common(band, o, false);
    auto* trace = app.add_subcommand("trace", "conductance versus gate voltage");
    add_common(trace, o, true);
    trace->add_option("--field", field, "perpendicular field, T")->check(CLI::NonNegativeNumber);
    auto* map = app.add_subcommand("map", "conductance versus field and gate voltage");
    add_common(map, o, true);
    auto* analyze = app.add_subcommand("analyze", "plateau metrics of a trace CSV");
    add_common(analyze, o, false);
    analyze->add_option("csv", csv, "trace CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << app.help() << "\nerror: " << e.what() << "\n";
        return 2;
    }

    try {
        if (*params) return run_params(o);
        if (*band) return run_band(o);
        if (*trace) return run_trace(o, field);
        if (*map) return run_map(o);
        if (*analyze) return run_analyze(o, csv);
    } catch (const std::exception& e) {
        io::json line{{"error", error_kind(e)}, {"message", e.what()}};
        std::cerr << line.dump() << "\n";
        return 1;
    }
    return 2;
}
