#include "sqpc/io.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "sqpc/errors.hpp"
#include "sqpc/units.hpp"

namespace sqpc::io {

namespace {

// Walks one JSON object, remembering which keys were read so the rest can be
// rejected as unknown.
class Section {
public:
    Section(const json* node, std::string path, std::vector<std::string>* defaults)
        : node_(node), path_(std::move(path)), defaults_(defaults) {
        if (node_ && !node_->is_object()) throw ConfigError(where() + ": object expected");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return node_ && node_->contains(key);
    }

    template <class T>
    void get(const std::string& key, T& out) {
        if (!has(key)) {
            if (defaults_) defaults_->push_back(dotted(key));
            return;
        }
        try {
            out = node_->at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(dotted(key) + ": expected " + type_name<T>() + ", got " +
                              std::string(node_->at(key).type_name()));
        }
    }

    const json* child(const std::string& key) {
        return has(key) ? &node_->at(key) : nullptr;
    }

    std::string dotted(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void reject_unknown() const {
        if (!node_) return;
        for (auto it = node_->begin(); it != node_->end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError("unknown key '" + dotted(it.key()) + "'");
    }

private:
    template <class T>
    static std::string type_name() {
        if constexpr (std::is_same_v<T, bool>) return "boolean";
        else if constexpr (std::is_arithmetic_v<T>) return "number";
        else return "string";
    }
    std::string where() const { return path_.empty() ? "config" : path_; }

    const json* node_;
    std::string path_;
    std::vector<std::string>* defaults_;
    std::set<std::string> seen_;
};

const std::map<std::string, MaterialParams (*)()>& material_presets() {
    static const std::map<std::string, MaterialParams (*)()> presets = {
        {"In0.75Ga0.25As", materials::in075ga025as}, {"In0.75Al0.25As", materials::in075al025as},
        {"In0.10Al0.90As", materials::in010al090as}, {"GaAs", materials::gaas},
        {"AlAs", materials::alas},
    };
    return presets;
}

MaterialParams parse_material(const json& j, const std::string& path) {
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        const auto it = material_presets().find(name);
        if (it == material_presets().end()) throw ConfigError(path + ": unknown material '" + name + "'");
        return it->second();
    }
    Section s(&j, path, nullptr);
    MaterialParams m;
    if (!s.has("name")) throw ConfigError(path + ".name: required");
    s.get("name", m.name);
    s.get("m_eff", m.m_eff);
    s.get("cb_offset", m.cb_offset);
    s.get("eps_r", m.eps_r);
    s.reject_unknown();
    return m;
}

json material_to_json(const MaterialParams& m) {
    const auto it = material_presets().find(m.name);
    if (it != material_presets().end()) {
        const auto p = it->second();
        if (p.m_eff == m.m_eff && p.cb_offset == m.cb_offset && p.eps_r == m.eps_r) return m.name;
    }
    return json{{"name", m.name}, {"m_eff", m.m_eff}, {"cb_offset", m.cb_offset}, {"eps_r", m.eps_r}};
}

void parse_range(Section& parent, const std::string& key, SweepRange& r) {
    const json* node = parent.child(key);
    if (!node) return;
    Section s(node, parent.dotted(key), nullptr);
    s.get("start", r.start);
    s.get("stop", r.stop);
    s.get("step", r.step);
    s.reject_unknown();
}

json range_to_json(const SweepRange& r) { return json{{"start", r.start}, {"stop", r.stop}, {"step", r.step}}; }

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    return f;
}

void close_out(std::ofstream& f, const std::string& path) {
    f.close();
    if (!f) throw IoError("write to '" + path + "' failed");
}

}  // namespace

LoadedConfig default_loaded_config() {
    LoadedConfig l;
    l.config = default_config();
    return l;
}

LoadedConfig parse_config_text(const std::string& text, const std::string& source) {
    json root;
    try {
        root = json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_column(text, e.byte);
        std::ostringstream os;
        os << source << ":" << line << ":" << col << ": parse error: " << e.what();
        throw ConfigError(os.str());
    }
    LoadedConfig out = default_loaded_config();
    auto& c = out.config;
    auto* defaults = &out.defaults_applied;
    Section top(&root, "", nullptr);

    {
        Section s(top.child("wafer"), "wafer", defaults);
        s.get("surface_pinning", c.wafer.surface_pinning);
        if (const json* layers = s.child("layers")) {
            if (!layers->is_array() || layers->empty()) throw ConfigError("wafer.layers: non-empty array expected");
            c.wafer.layers.clear();
            for (std::size_t i = 0; i < layers->size(); ++i) {
                const std::string path = "wafer.layers[" + std::to_string(i) + "]";
                Section ls(&(*layers)[i], path, nullptr);
                Layer layer;
                if (!ls.has("material")) throw ConfigError(path + ".material: required");
                layer.material = parse_material((*layers)[i]["material"], path + ".material");
                ls.get("thickness", layer.thickness);
                ls.get("doping", layer.doping);
                if (const json* g = ls.child("grade_to")) layer.grade_to = parse_material(*g, path + ".grade_to");
                ls.reject_unknown();
                c.wafer.layers.push_back(layer);
            }
        } else {
            defaults->push_back("wafer.layers");
        }
        s.reject_unknown();
    }
    {
        Section s(top.child("device"), "device", defaults);
        if (s.has("index")) {
            int index = 0;
            s.get("index", index);
            c.device = preset_device(index);
            c.device_index = index;
        }
        const DeviceGeometry before = c.device;
        s.get("L_c", c.device.L_c);
        s.get("W_c", c.device.W_c);
        s.get("L_J", c.device.L_J);
        s.get("W_J", c.device.W_J);
        s.get("depth", c.device.depth);
        s.get("Z", c.device.Z);
        std::string interfaces = c.device.interfaces == Interfaces::one ? "one" : "two";
        s.get("interfaces", interfaces);
        if (interfaces == "one") c.device.interfaces = Interfaces::one;
        else if (interfaces == "two") c.device.interfaces = Interfaces::two;
        else throw ConfigError("device.interfaces: must be one or two (got '" + interfaces + "')");
        // Explicit geometry overrides make the device no longer a preset.
        if (c.device.L_c != before.L_c || c.device.W_c != before.W_c || c.device.L_J != before.L_J ||
            c.device.W_J != before.W_J || c.device.depth != before.depth)
            c.device_index.reset();
        s.reject_unknown();
    }
    {
        Section s(top.child("physics"), "physics", defaults);
        s.get("n_s", c.physics.n_s);
        s.get("mu_e", c.physics.mu_e);
        s.get("m_eff", c.physics.m_eff);
        s.get("delta_0", c.physics.delta_0);
        s.get("gap_scale", c.physics.gap_scale);
        s.get("B_c", c.physics.B_c);
        s.get("temperature", c.physics.temperature);
        s.get("lattice_a", c.physics.lattice_a);
        s.get("orbital", c.physics.orbital);
        s.reject_unknown();
    }
    {
        Section s(top.child("gates"), "gates", defaults);
        s.get("lever", c.gates.lever);
        s.get("sim_width", c.gates.sim_width);
        s.get("margin", c.gates.margin);
        s.get("disorder", c.gates.disorder);
        s.get("seed", c.gates.seed);
        s.reject_unknown();
    }
    {
        Section s(top.child("sweep"), "sweep", defaults);
        parse_range(s, "gate", c.sweep.gate);
        parse_range(s, "field", c.sweep.field);
        std::string model = to_string(c.sweep.model);
        s.get("model", model);
        c.sweep.model = transport_model_from_string(model);
        s.get("thermal", c.sweep.thermal);
        s.get("energy_points", c.sweep.energy_points);
        s.reject_unknown();
    }
    {
        Section s(top.child("analysis"), "analysis", defaults);
        s.get("slope_eps", c.analysis.slope_eps);
        s.get("min_width", c.analysis.min_width);
        s.get("pinch_threshold", c.analysis.pinch_threshold);
        s.reject_unknown();
    }
    {
        Section s(top.child("band"), "band", defaults);
        s.get("mixing", out.band.mixing);
        s.get("tol", out.band.tol);
        s.get("spacing", out.band.options.spacing);
        s.get("n_states", out.band.options.n_states);
        s.get("max_iterations", out.band.options.max_iterations);
        s.reject_unknown();
        if (!(out.band.mixing > 0.0 && out.band.mixing <= 1.0)) throw ConfigError("band.mixing: 0 < mixing <= 1 required");
        if (!(out.band.tol > 0.0)) throw ConfigError("band.tol: tol > 0 required");
        if (!(out.band.options.spacing > 0.0)) throw ConfigError("band.spacing: spacing > 0 required");
        if (out.band.options.n_states < 1) throw ConfigError("band.n_states: n_states >= 1 required");
        if (out.band.options.max_iterations < 1) throw ConfigError("band.max_iterations: max_iterations >= 1 required");
    }
    {
        Section s(top.child("output"), "output", defaults);
        s.get("dir", out.output.dir);
        s.reject_unknown();
    }
    top.reject_unknown();

    try {
        c.validate();
    } catch (const DomainError& e) {
        throw ConfigError(source + ": validation error: " + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(source + ": validation error: " + e.what());
    }
    return out;
}

LoadedConfig parse_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open config '" + path + "'");
    std::ostringstream os;
    os << f.rdbuf();
    return parse_config_text(os.str(), path);
}

json config_to_json(const LoadedConfig& l) {
    const auto& c = l.config;
    json layers = json::array();
    for (const auto& layer : c.wafer.layers) {
        json j{{"material", material_to_json(layer.material)}, {"thickness", layer.thickness}, {"doping", layer.doping}};
        if (layer.grade_to) j["grade_to"] = material_to_json(*layer.grade_to);
        layers.push_back(j);
    }
    json device;
    if (c.device_index) device["index"] = *c.device_index;
    device["L_c"] = c.device.L_c;
    device["W_c"] = c.device.W_c;
    device["L_J"] = c.device.L_J;
    device["W_J"] = c.device.W_J;
    device["depth"] = c.device.depth;
    device["interfaces"] = c.device.interfaces == Interfaces::one ? "one" : "two";
    device["Z"] = c.device.Z;
    return json{
        {"wafer", {{"surface_pinning", c.wafer.surface_pinning}, {"layers", layers}}},
        {"device", device},
        {"physics",
         {{"n_s", c.physics.n_s},
          {"mu_e", c.physics.mu_e},
          {"m_eff", c.physics.m_eff},
          {"delta_0", c.physics.delta_0},
          {"gap_scale", c.physics.gap_scale},
          {"B_c", c.physics.B_c},
          {"temperature", c.physics.temperature},
          {"lattice_a", c.physics.lattice_a},
          {"orbital", c.physics.orbital}}},
        {"gates",
         {{"lever", c.gates.lever},
          {"sim_width", c.gates.sim_width},
          {"margin", c.gates.margin},
          {"disorder", c.gates.disorder},
          {"seed", c.gates.seed}}},
        {"sweep",
         {{"gate", range_to_json(c.sweep.gate)},
          {"field", range_to_json(c.sweep.field)},
          {"model", to_string(c.sweep.model)},
          {"thermal", c.sweep.thermal},
          {"energy_points", c.sweep.energy_points}}},
        {"analysis",
         {{"slope_eps", c.analysis.slope_eps},
          {"min_width", c.analysis.min_width},
          {"pinch_threshold", c.analysis.pinch_threshold}}},
        {"band",
         {{"mixing", l.band.mixing},
          {"tol", l.band.tol},
          {"spacing", l.band.options.spacing},
          {"n_states", l.band.options.n_states},
          {"max_iterations", l.band.options.max_iterations}}},
        {"output", {{"dir", l.output.dir}}},
    };
}

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_trace(const sweep::Trace& trace, const std::string& path) {
    trace.validate();
    auto f = open_out(path);
    f << "# model: " << to_string(trace.model) << "\n";
    if (trace.device) f << "# device: " << *trace.device << "\n";
    f << "# B: " << format_double(trace.B) << "\n";
    f << "# delta_0: " << format_double(trace.delta_0) << "\n";
    f << "# Z: " << format_double(trace.Z) << "\n";
    f << "# temperature: " << format_double(trace.temperature) << "\n";
    f << "V_g[V],G[2e^2/h]\n";
    for (std::size_t i = 0; i < trace.V_g.size(); ++i)
        f << format_double(trace.V_g[i]) << ',' << format_double(trace.G[i]) << '\n';
    close_out(f, path);
}

sweep::Trace read_trace(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open trace '" + path + "'");
    sweep::Trace t;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    auto number = [&](const std::string& s, const char* what) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (s.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw IoError(path + ":" + std::to_string(lineno) + ": bad " + what + " '" + s + "'");
        }
    };
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        if (line[0] == '#') {
            const auto colon = line.find(':');
            if (colon == std::string::npos) continue;
            auto trim = [](std::string s) {
                const auto b = s.find_first_not_of(" \t");
                const auto e = s.find_last_not_of(" \t");
                return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
            };
            const auto key = trim(line.substr(1, colon - 1));
            const auto value = trim(line.substr(colon + 1));
            if (key == "model") t.model = transport_model_from_string(value);
            else if (key == "device") t.device = static_cast<int>(number(value, "device"));
            else if (key == "B") t.B = number(value, "B");
            else if (key == "delta_0") t.delta_0 = number(value, "delta_0");
            else if (key == "Z") t.Z = number(value, "Z");
            else if (key == "temperature") t.temperature = number(value, "temperature");
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw IoError(path + ":" + std::to_string(lineno) + ": expected two columns");
        const auto a = line.substr(0, comma);
        const auto b = line.substr(comma + 1);
        if (!header_seen && t.V_g.empty()) {
            header_seen = true;
            char* end = nullptr;
            std::strtod(a.c_str(), &end);
            if (end == a.c_str()) continue;   // not numeric: a header line
        }
        if (b.find(',') != std::string::npos)
            throw IoError(path + ":" + std::to_string(lineno) + ": expected two columns");
        t.V_g.push_back(number(a, "V_g"));
        t.G.push_back(number(b, "G"));
    }
    try {
        t.validate();
    } catch (const DomainError& e) {
        throw IoError(path + ": " + e.what());
    }
    return t;
}

void write_map(const sweep::FieldMap& map, const std::string& path) {
    map.validate();
    auto f = open_out(path);
    f << "B[T],V_g[V],G[2e^2/h]\n";
    for (std::size_t i = 0; i < map.B.size(); ++i) {
        const auto& t = map.traces[i];
        for (std::size_t k = 0; k < t.V_g.size(); ++k)
            f << format_double(map.B[i]) << ',' << format_double(t.V_g[k]) << ',' << format_double(t.G[k]) << '\n';
    }
    close_out(f, path);
}

json report_to_json(const sweep::PlateauReport& r) {
    json plateaus = json::array();
    for (const auto& p : r.plateaus)
        plateaus.push_back({{"v_start", p.v_start}, {"v_end", p.v_end}, {"height", p.height}});
    auto opt = [](const std::optional<double>& x) { return x ? json(*x) : json(nullptr); };
    return json{{"plateaus", plateaus}, {"V_p1", opt(r.V_p1)}, {"V_p2", opt(r.V_p2)},
                {"H1", opt(r.H1)},       {"H2", opt(r.H2)},     {"G_off", opt(r.G_off)}};
}

void write_json(const json& j, const std::string& path) {
    auto f = open_out(path);
    f << j.dump(2) << '\n';
    close_out(f, path);
}

void write_report(const sweep::PlateauReport& report, const std::string& path) {
    write_json(report_to_json(report), path);
}

json derived_to_json(const Derived2DEG& d) {
    auto finite = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
    return json{{"n_s", d.n_s},         {"mu_e", d.mu_e}, {"k_F", d.k_F}, {"lambda_F", d.lambda_F},
                {"v_F", d.v_F},         {"E_F", d.E_F},   {"xi_0", finite(d.xi_0)}};
}

void write_band_csv(const band::BandProfile& p, const std::string& path, int envelopes) {
    auto f = open_out(path);
    const auto n_env = std::min<std::size_t>(static_cast<std::size_t>(std::max(envelopes, 0)), p.eigenstates.size());
    f << "x[nm],E_c[meV],n[m^-3]";
    for (std::size_t k = 0; k < n_env; ++k) f << ",psi" << k << "[nm^-1/2]";
    f << '\n';
    for (std::size_t i = 0; i < p.grid.size(); ++i) {
        f << format_double(p.grid.positions[i]) << ',' << format_double(p.cb_edge[i]) << ','
          << format_double(p.density[i]);
        for (std::size_t k = 0; k < n_env; ++k) f << ',' << format_double(p.eigenstates[k].envelope[i]);
        f << '\n';
    }
    close_out(f, path);
}

json band_summary(const band::BandProfile& p) {
    json states = json::array();
    for (const auto& s : p.eigenstates) states.push_back(s.energy);
    return json{{"sheet_density_m2", p.sheet_density},
                {"sheet_density_cm2", p.sheet_density / units::cm2_to_m2},
                {"surface_charge_m2", p.surface_charge},
                {"iterations", p.iterations},
                {"final_residual", p.residual_history.empty() ? 0.0 : p.residual_history.back()},
                {"eigen_energies_meV", states}};
}

std::string sha256_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for hashing");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw IoError("sha256: digest init failed");
    }
    char buf[1 << 16];
    while (f) {
        f.read(buf, sizeof buf);
        if (f.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(f.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return os.str();
}

void write_run_record(const RunRecord& r, const std::string& path) {
    json manifest = json::array();
    for (const auto& out : r.outputs) manifest.push_back({{"path", out}, {"sha256", sha256_file(out)}});
    write_json(json{{"version", r.version}, {"timestamp", r.timestamp}, {"config", r.config}, {"outputs", manifest}},
               path);
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace sqpc::io
