#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "sqpc/core_model.hpp"
#include "sqpc/schrodinger_poisson.hpp"
#include "sqpc/sweep.hpp"

namespace sqpc::io {

using json = nlohmann::ordered_json;

/// Settings of the `band` subcommand that are not part of SimulationConfig.
struct BandSettings {
    double mixing = 0.3;
    double tol = 1e-6;
    band::BandOptions options;
};

struct OutputSettings {
    std::string dir = "out";
};

struct LoadedConfig {
    SimulationConfig config;
    BandSettings band;
    OutputSettings output;
    /// Dotted keys that were absent and took their default value.
    std::vector<std::string> defaults_applied;
};

/// Built-in defaults: preset device 5, the calibrated wafer.
LoadedConfig default_loaded_config();

/// Parses JSON config text. Unknown keys, type mismatches and syntax errors
/// raise ConfigError; syntax errors report line and column within `source`.
/// The result is validated.
LoadedConfig parse_config_text(const std::string& text, const std::string& source = "<config>");
LoadedConfig parse_config(const std::string& path);

/// Full config as JSON, in the same layout parse_config_text accepts.
json config_to_json(const LoadedConfig& loaded);

std::string format_double(double x);

void write_trace(const sweep::Trace& trace, const std::string& path);
/// Reads a trace CSV. Comment lines ('#') may carry `key: value` metadata;
/// a header line is optional. Two numeric columns per row: V_g, G.
sweep::Trace read_trace(const std::string& path);

void write_map(const sweep::FieldMap& map, const std::string& path);

json report_to_json(const sweep::PlateauReport& report);
void write_report(const sweep::PlateauReport& report, const std::string& path);

json derived_to_json(const Derived2DEG& d);

/// Band profile as CSV: x, cb_edge, density and the lowest envelopes.
void write_band_csv(const band::BandProfile& profile, const std::string& path, int envelopes = 4);
json band_summary(const band::BandProfile& profile);

void write_json(const json& j, const std::string& path);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

struct RunRecord {
    json config;
    std::string version;
    std::string timestamp;   // UTC, ISO 8601
    std::vector<std::string> outputs;
};

/// Writes the record with one checksum per listed output file.
void write_run_record(const RunRecord& record, const std::string& path);

std::string utc_timestamp();

}  // namespace sqpc::io
