#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "qtube/errors.hpp"
#include "qtube/experiment.hpp"

namespace qtube {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

struct Section {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;
};

std::vector<Section> parse_sections(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::vector<Section> sections;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(path + ":" + std::to_string(lineno) + ": malformed section header");
            sections.push_back({trim(line.substr(1, line.size() - 2)), {}});
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        if (sections.empty())
            throw ConfigError(path + ":" + std::to_string(lineno) + ": entry outside any section");
        sections.back().entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return sections;
}

double parse_double(const std::string& key, const std::string& value) {
    if (value == "inf" || value == "+inf") return std::numeric_limits<double>::infinity();
    if (value == "-inf") return -std::numeric_limits<double>::infinity();
    try {
        size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': cannot parse '" + value + "' as a number");
    }
}

int parse_int(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const int v = std::stoi(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': cannot parse '" + value + "' as an integer");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("key '" + key + "': expected true/false, got '" + value + "'");
}

std::pair<double, double> parse_interval(const std::string& key, const std::string& value) {
    std::istringstream ss(value);
    std::string lo_s, hi_s, extra;
    if (!(ss >> lo_s >> hi_s) || (ss >> extra))
        throw ConfigError("domain '" + key + "': expected '<lo> <hi>', got '" + value + "'");
    return {parse_double(key, lo_s), parse_double(key, hi_s)};
}

void apply_grid(RunConfig& cfg, const Section& s) {
    for (const auto& [k, v] : s.entries) {
        if (k == "x_min") cfg.grid.x_min = parse_double(k, v);
        else if (k == "x_max") cfg.grid.x_max = parse_double(k, v);
        else if (k == "n_points") cfg.grid.n_points = parse_int(k, v);
        else throw ConfigError("unknown key '" + k + "' in [grid]");
    }
}

void apply_potential(RunConfig& cfg, const Section& s) {
    for (const auto& [k, v] : s.entries) {
        if (k == "kind") {
            if (v == "free") cfg.potential.kind = PotentialSpec::Kind::free;
            else if (v == "tanh_barrier") cfg.potential.kind = PotentialSpec::Kind::tanh_barrier;
            else throw ConfigError("unknown potential kind '" + v + "'");
        } else if (k == "v0") cfg.potential.V0 = parse_double(k, v);
        else if (k == "alpha") cfg.potential.alpha = parse_double(k, v);
        else if (k == "x_minus") cfg.potential.x_minus = parse_double(k, v);
        else if (k == "x_plus") cfg.potential.x_plus = parse_double(k, v);
        else throw ConfigError("unknown key '" + k + "' in [potential]");
    }
}

GaussianSpec parse_packet(const Section& s) {
    GaussianSpec p;
    for (const auto& [k, v] : s.entries) {
        if (k == "x0") p.x0 = parse_double(k, v);
        else if (k == "p0") p.p0 = parse_double(k, v);
        else if (k == "sigma0") p.sigma0 = parse_double(k, v);
        else if (k == "c") p.c = parse_double(k, v);
        else throw ConfigError("unknown key '" + k + "' in [packet]");
    }
    return p;
}

void apply_propagation(RunConfig& cfg, const Section& s) {
    for (const auto& [k, v] : s.entries) {
        if (k == "dt") cfg.prop.dt = parse_double(k, v);
        else if (k == "n_steps") cfg.prop.n_steps = parse_int(k, v);
        else if (k == "snapshot_stride") cfg.prop.snapshot_stride = parse_int(k, v);
        else if (k == "mass") cfg.prop.mass = parse_double(k, v);
        else throw ConfigError("unknown key '" + k + "' in [propagation]");
    }
}

void apply_ensemble(RunConfig& cfg, const Section& s) {
    for (const auto& [k, v] : s.entries) {
        if (k == "n_trajectories") cfg.ensemble.n_trajectories = parse_int(k, v);
        else if (k == "scheme") {
            if (v == "even") cfg.ensemble.scheme = SamplingScheme::even;
            else if (v == "quantile") cfg.ensemble.scheme = SamplingScheme::quantile;
            else throw ConfigError("unknown sampling scheme '" + v + "'");
        } else if (k == "support_cut") cfg.ensemble.support_cut = parse_double(k, v);
        else if (k == "substeps") cfg.ensemble.substeps = parse_int(k, v);
        else if (k == "born_probe_n") cfg.ensemble.born_probe_n = parse_int(k, v);
        else throw ConfigError("unknown key '" + k + "' in [ensemble]");
    }
}

void apply_tube(RunConfig& cfg, const Section& s) {
    for (const auto& [k, v] : s.entries) {
        if (k == "enabled") cfg.tube.enabled = parse_bool(k, v);
        else if (k == "target") cfg.tube.target_label = v;
        else if (k == "bracket_lo") cfg.tube.bracket_lo = parse_double(k, v);
        else if (k == "bracket_hi") cfg.tube.bracket_hi = parse_double(k, v);
        else if (k == "tol") cfg.tube.tol = parse_double(k, v);
        else if (k == "require_forward_velocity") cfg.tube.require_forward_velocity = parse_bool(k, v);
        else if (k == "upper_support_cut") cfg.tube.upper_support_cut = parse_double(k, v);
        else if (k == "asymptotic_label") cfg.tube.asymptotic_label = v;
        else if (k == "asymptotic_threshold") cfg.tube.asymptotic_threshold = parse_double(k, v);
        else throw ConfigError("unknown key '" + k + "' in [tube]");
    }
}

void apply_grating(RunConfig& cfg, const Section& s) {
    for (const auto& [k, v] : s.entries) {
        if (k == "enabled") cfg.grating.enabled = parse_bool(k, v);
        else if (k == "n_slits") cfg.grating.n_slits = parse_int(k, v);
        else if (k == "spacing") cfg.grating.spacing = parse_double(k, v);
        else if (k == "t_segment") cfg.grating.t_segment = parse_double(k, v);
        else if (k == "t_fraunhofer") cfg.grating.t_fraunhofer = parse_double(k, v);
        else if (k == "branch_swarm_width") cfg.grating.branch_swarm_width = parse_double(k, v);
        else if (k == "branch_swarm_size") cfg.grating.branch_swarm_size = parse_int(k, v);
        else throw ConfigError("unknown key '" + k + "' in [grating]");
    }
}

void apply_output(RunConfig& cfg, const Section& s) {
    for (const auto& [k, v] : s.entries) {
        if (k == "directory") cfg.out_dir = v;
        else if (k == "export_snapshots") cfg.export_snapshots = parse_bool(k, v);
        else throw ConfigError("unknown key '" + k + "' in [output]");
    }
}

}  // namespace

void apply_config_file(RunConfig& cfg, const std::string& path) {
    bool packets_reset = false;
    bool domains_reset = false;
    for (const auto& s : parse_sections(path)) {
        if (s.name == "grid") apply_grid(cfg, s);
        else if (s.name == "potential") apply_potential(cfg, s);
        else if (s.name == "packet") {
            if (!packets_reset) { cfg.packets.clear(); packets_reset = true; }
            cfg.packets.push_back(parse_packet(s));
        } else if (s.name == "propagation") apply_propagation(cfg, s);
        else if (s.name == "ensemble") apply_ensemble(cfg, s);
        else if (s.name == "tube") apply_tube(cfg, s);
        else if (s.name == "domains") {
            if (!domains_reset) { cfg.domains.clear(); domains_reset = true; }
            for (const auto& [label, value] : s.entries) {
                const auto [lo, hi] = parse_interval(label, value);
                cfg.domains.push_back({label, lo, hi});
            }
        } else if (s.name == "grating") apply_grating(cfg, s);
        else if (s.name == "output") apply_output(cfg, s);
        else throw ConfigError("unknown section [" + s.name + "] in " + path);
    }
}

}  // namespace qtube
