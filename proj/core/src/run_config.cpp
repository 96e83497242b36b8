#include "droplet/run_config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "droplet/errors.hpp"

namespace droplet {

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': cannot parse '" + value + "' as a number");
    }
}

long parse_long(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        const long v = std::stol(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': cannot parse '" + value + "' as an integer");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw ConfigError("config key '" + key + "': expected true or false, got '" + value + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError("config key '" + key + "': empty list element");
        out.push_back(parse_double(key, item));
    }
    if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
    return out;
}

}  // namespace

std::string to_string(RunConfig::Mode mode) {
    switch (mode) {
        case RunConfig::Mode::Predict: return "predict";
        case RunConfig::Mode::GroundState: return "ground_state";
        case RunConfig::Mode::Evolve: return "evolve";
        case RunConfig::Mode::Sense: return "sense";
        case RunConfig::Mode::ThresholdScan: return "threshold_scan";
    }
    return "unknown";
}

std::string to_string(RunConfig::SeedProfile profile) {
    switch (profile) {
        case RunConfig::SeedProfile::Gaussian: return "gaussian";
        case RunConfig::SeedProfile::Homogeneous: return "homogeneous";
        case RunConfig::SeedProfile::File: return "file";
    }
    return "unknown";
}

namespace {
void apply_config_key(RunConfig& cfg, const std::string& key, const std::string& value);
}

void RunConfig::apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("override '" + assignment + "' is not of the form key=value");
    }
    apply_config_key(*this, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

namespace {

// Single key table shared by the file parser and --override handling.
void apply_config_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    static const std::set<std::string> anchor_keys = {"anchors.lambda0", "anchors.d_mirror",
                                                      "anchors.gamma", "anchors.mass"};

    if (key == "mode") {
        if (value == "predict") cfg.mode = RunConfig::Mode::Predict;
        else if (value == "ground_state") cfg.mode = RunConfig::Mode::GroundState;
        else if (value == "evolve") cfg.mode = RunConfig::Mode::Evolve;
        else if (value == "sense") cfg.mode = RunConfig::Mode::Sense;
        else if (value == "threshold_scan") cfg.mode = RunConfig::Mode::ThresholdScan;
        else throw ConfigError("config key 'mode': unknown mode '" + value + "'");
    } else if (key == "params.omega_r_bar") {
        cfg.params.omega_r_bar = parse_double(key, value);
    } else if (key == "params.b0") {
        cfg.params.b0 = parse_double(key, value);
    } else if (key == "params.delta") {
        cfg.params.delta = parse_double(key, value);
    } else if (key == "params.mirror_R") {
        cfg.params.mirror_R = parse_double(key, value);
    } else if (key == "params.p0") {
        cfg.params.p0 = parse_double(key, value);
    } else if (key == "params.a_bar") {
        cfg.params.a_bar = parse_double(key, value);
    } else if (key == "grid.n_points") {
        cfg.grid_n_points = static_cast<int>(parse_long(key, value));
    } else if (key == "grid.length") {
        cfg.grid_length = parse_double(key, value);
    } else if (key == "evolution.dt") {
        if (value == "auto") {
            cfg.dt_auto = true;
        } else {
            cfg.dt_auto = false;
            cfg.dt = parse_double(key, value);
        }
    } else if (key == "evolution.t_final") {
        cfg.t_final = parse_double(key, value);
    } else if (key == "evolution.snapshot_stride") {
        cfg.snapshot_stride = static_cast<int>(parse_long(key, value));
    } else if (key == "evolution.boundary_guard") {
        cfg.boundary_guard = parse_double(key, value);
    } else if (key == "evolution.track") {
        if (value == "backward_at_BEC") cfg.track = IntensityKind::BackwardAtBec;
        else if (value == "image_plane_forward") cfg.track = IntensityKind::ImagePlaneForward;
        else throw ConfigError("config key 'evolution.track': unknown observable '" + value + "'");
    } else if (key == "seed.profile") {
        if (value == "gaussian") cfg.seed_profile = RunConfig::SeedProfile::Gaussian;
        else if (value == "homogeneous") cfg.seed_profile = RunConfig::SeedProfile::Homogeneous;
        else if (value == "file") cfg.seed_profile = RunConfig::SeedProfile::File;
        else throw ConfigError("config key 'seed.profile': unknown profile '" + value + "'");
    } else if (key == "seed.center") {
        cfg.seed_center = parse_double(key, value);
    } else if (key == "seed.width") {
        if (value == "auto") {
            cfg.seed_width_auto = true;
        } else {
            cfg.seed_width_auto = false;
            cfg.seed_width = parse_double(key, value);
        }
    } else if (key == "seed.file") {
        cfg.seed_file = value;
    } else if (key == "relax.tol") {
        cfg.relax_tol = parse_double(key, value);
    } else if (key == "relax.dt") {
        cfg.relax_dt = parse_double(key, value);
    } else if (key == "relax.max_steps") {
        cfg.relax_max_steps = parse_long(key, value);
    } else if (key == "scan.p0_factors") {
        cfg.scan_p0_factors = parse_list(key, value);
    } else if (key == "scan.probe_amplitude") {
        cfg.scan_probe_amplitude = parse_double(key, value);
    } else if (key == "scan.n_points") {
        cfg.scan_n_points = static_cast<int>(parse_long(key, value));
    } else if (key == "scan.length") {
        cfg.scan_length = parse_double(key, value);
    } else if (anchor_keys.count(key) > 0) {
        if (!cfg.anchors.has_value()) cfg.anchors.emplace();
        const double v = parse_double(key, value);
        if (key == "anchors.lambda0") cfg.anchors->lambda0 = v;
        else if (key == "anchors.d_mirror") cfg.anchors->d_mirror = v;
        else if (key == "anchors.gamma") cfg.anchors->gamma = v;
        else cfg.anchors->mass = v;
    } else if (key == "output.dir") {
        cfg.output_dir = value;
    } else if (key == "output.field_stride") {
        cfg.field_stride = static_cast<int>(parse_long(key, value));
    } else if (key == "output.plots") {
        cfg.plots = parse_bool(key, value);
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

}  // namespace

RunConfig RunConfig::parse_text(const std::string& text) {
    RunConfig cfg;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected 'key = value', got '" + line + "'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        }
        if (!seen.insert(key).second) {
            throw ConfigError("duplicate config key '" + key + "'");
        }
        apply_config_key(cfg, key, value);
    }
    return cfg;
}

RunConfig RunConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_text(buffer.str());
}

void RunConfig::validate() const {
    params.validate(nullptr);
    if (grid_n_points < 16) throw ConfigError("grid.n_points must be >= 16");
    if (!(grid_length > 0.0)) throw ConfigError("grid.length must be > 0");
    if (!dt_auto && !(dt > 0.0)) throw ConfigError("evolution.dt must be > 0 or 'auto'");
    if (snapshot_stride < 1) throw ConfigError("evolution.snapshot_stride must be >= 1");
    if (!(boundary_guard > 0.0 && boundary_guard < 1.0)) {
        throw ConfigError("evolution.boundary_guard must lie in (0, 1)");
    }
    if (mode == Mode::Evolve || mode == Mode::Sense) {
        if (!(t_final > 0.0)) throw ConfigError("evolution.t_final must be > 0 for this mode");
    }
    if (seed_profile == SeedProfile::File && seed_file.empty()) {
        throw ConfigError("seed.profile = file requires seed.file");
    }
    if (!seed_width_auto && !(seed_width > 0.0)) {
        throw ConfigError("seed.width must be > 0 or 'auto'");
    }
    if (!(relax_tol > 0.0)) throw ConfigError("relax.tol must be > 0");
    if (!(relax_dt > 0.0)) throw ConfigError("relax.dt must be > 0");
    if (relax_max_steps < 1) throw ConfigError("relax.max_steps must be >= 1");
    if (!(scan_probe_amplitude > 0.0)) throw ConfigError("scan.probe_amplitude must be > 0");
    if (scan_n_points < 16) throw ConfigError("scan.n_points must be >= 16");
    if (!(scan_length > 0.0)) throw ConfigError("scan.length must be > 0");
    for (double f : scan_p0_factors) {
        if (!(f > 0.0)) throw ConfigError("scan.p0_factors entries must be > 0");
    }
    if (field_stride < 0) throw ConfigError("output.field_stride must be >= 0");
    if (anchors.has_value()) anchors->validate();
}

std::string RunConfig::canonical() const {
    std::ostringstream out;
    out << "mode = " << to_string(mode) << "\n";
    out << "params.omega_r_bar = " << fmt(params.omega_r_bar) << "\n";
    out << "params.b0 = " << fmt(params.b0) << "\n";
    out << "params.delta = " << fmt(params.delta) << "\n";
    out << "params.mirror_R = " << fmt(params.mirror_R) << "\n";
    out << "params.p0 = " << fmt(params.p0) << "\n";
    out << "params.a_bar = " << fmt(params.a_bar) << "\n";
    out << "grid.n_points = " << grid_n_points << "\n";
    out << "grid.length = " << fmt(grid_length) << "\n";
    out << "evolution.dt = " << (dt_auto ? std::string("auto") : fmt(dt)) << "\n";
    out << "evolution.t_final = " << fmt(t_final) << "\n";
    out << "evolution.snapshot_stride = " << snapshot_stride << "\n";
    out << "evolution.boundary_guard = " << fmt(boundary_guard) << "\n";
    out << "evolution.track = " << droplet::to_string(track) << "\n";
    out << "seed.profile = " << to_string(seed_profile) << "\n";
    out << "seed.center = " << fmt(seed_center) << "\n";
    out << "seed.width = " << (seed_width_auto ? std::string("auto") : fmt(seed_width)) << "\n";
    if (seed_profile == SeedProfile::File) {
        out << "seed.file = " << seed_file << "\n";
    }
    out << "relax.tol = " << fmt(relax_tol) << "\n";
    out << "relax.dt = " << fmt(relax_dt) << "\n";
    out << "relax.max_steps = " << relax_max_steps << "\n";
    out << "scan.p0_factors = ";
    for (size_t i = 0; i < scan_p0_factors.size(); ++i) {
        if (i > 0) out << ",";
        out << fmt(scan_p0_factors[i]);
    }
    out << "\n";
    out << "scan.probe_amplitude = " << fmt(scan_probe_amplitude) << "\n";
    out << "scan.n_points = " << scan_n_points << "\n";
    out << "scan.length = " << fmt(scan_length) << "\n";
    if (anchors.has_value()) {
        out << "anchors.lambda0 = " << fmt(anchors->lambda0) << "\n";
        out << "anchors.d_mirror = " << fmt(anchors->d_mirror) << "\n";
        out << "anchors.gamma = " << fmt(anchors->gamma) << "\n";
        out << "anchors.mass = " << fmt(anchors->mass) << "\n";
    }
    if (!output_dir.empty()) {
        out << "output.dir = " << output_dir << "\n";
    }
    out << "output.field_stride = " << field_stride << "\n";
    out << "output.plots = " << (plots ? "true" : "false") << "\n";
    return out.str();
}

}  // namespace droplet
