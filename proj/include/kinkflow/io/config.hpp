#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kinkflow/analysis.hpp"
#include "kinkflow/flow.hpp"
#include "kinkflow/io/format.hpp"
#include "kinkflow/io/sharp_file.hpp"
#include "kinkflow/model.hpp"

namespace kinkflow::io {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class InitialKind { circle, from_file, sharp_recovery };
enum class PhaseKind { initial, two_interface, constant, from_file };

struct InitialCurve {
    InitialKind kind = InitialKind::circle;
    std::optional<double> radius;
    int winding = 1;
    std::string path;        // snapshot for from_file
    std::string sharp_file;  // sharp state for sharp_recovery
    std::optional<double> eps;
};

struct InitialPhase {
    PhaseKind kind = PhaseKind::initial;
    std::optional<double> mean;
    std::vector<double> positions;
    std::optional<double> width;
    double value = 1.0;
    std::string path;
};

struct OutputConfig {
    std::string directory = ".";
    long snapshot_every = 0;
    bool svg = false;
};

struct SweepConfig {
    std::vector<double> eps;
    std::string sharp_file;
    GridPolicy grid;
    bool relax = false;
};

struct ExperimentConfig {
    ModelParams model;
    std::optional<int> n_points;
    std::optional<double> length;
    InitialCurve initial;
    InitialPhase phase;
    FlowParams flow;
    OutputConfig output;
    SweepConfig sweep;
    DetectionThresholds detect;
    double patch_factor = 10.0;
    std::set<std::string, std::less<>> keys;  // keys present in the file

    [[nodiscard]] bool has(std::string_view key) const { return keys.contains(key); }
};

struct ConfigKey {
    std::string_view key;
    std::string_view fallback;
    std::string_view help;
    std::function<void(ExperimentConfig&, std::string_view)> set;
};

namespace detail {

inline InitialKind parse_initial_kind(std::string_view s) {
    if (s == "circle") return InitialKind::circle;
    if (s == "from_file") return InitialKind::from_file;
    if (s == "sharp_recovery") return InitialKind::sharp_recovery;
    throw std::invalid_argument("unknown initial kind '" + std::string(s) + "'");
}

inline PhaseKind parse_phase_kind(std::string_view s) {
    if (s == "initial") return PhaseKind::initial;
    if (s == "two_interface") return PhaseKind::two_interface;
    if (s == "constant") return PhaseKind::constant;
    if (s == "from_file") return PhaseKind::from_file;
    throw std::invalid_argument("unknown phase kind '" + std::string(s) + "'");
}

inline int to_int(std::string_view s) {
    const long x = parse_integer(s);
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
        throw std::invalid_argument("integer out of range '" + std::string(s) + "'");
    return static_cast<int>(x);
}

}  // namespace detail

/// Every accepted key with its default and meaning.
inline const std::vector<ConfigKey>& config_keys() {
    using C = ExperimentConfig;
    using V = std::string_view;
    static const std::vector<ConfigKey> keys = {
        {"model.eps", "0.05", "interface width eps", [](C& c, V v) { c.model.eps = parse_real(v); }},
        {"model.m", "none", "prescribed mean of v, or none",
         [](C& c, V v) {
             if (v == "none") c.model.m.reset();
             else c.model.m = parse_real(v);
         }},
        {"model.volume_constraint", "false", "conserve the mean of v (H^-1 flow for v)",
         [](C& c, V v) { c.model.volume_constraint_active = parse_bool(v); }},
        {"model.potential", "quartic", "quartic a(1-v^2)^2 or single_well a(1-v)^2",
         [](C& c, V v) { c.model.potential.family = parse_potential_family(v); }},
        {"model.potential_scale", "1", "potential scale a > 0",
         [](C& c, V v) { c.model.potential = PotentialSpec(c.model.potential.family, parse_real(v)); }},
        {"model.c_minus", "0", "spontaneous curvature C(-1)", [](C& c, V v) { c.model.curvature_spec.c_minus = parse_real(v); }},
        {"model.c_plus", "0", "spontaneous curvature C(+1)", [](C& c, V v) { c.model.curvature_spec.c_plus = parse_real(v); }},
        {"grid.n_points", "from initial data", "number of grid points (>= 16)",
         [](C& c, V v) { c.n_points = detail::to_int(v); }},
        {"grid.length", "2 pi radius for circles", "curve length L", [](C& c, V v) { c.length = parse_real(v); }},
        {"initial.kind", "circle", "circle, from_file or sharp_recovery",
         [](C& c, V v) { c.initial.kind = detail::parse_initial_kind(v); }},
        {"initial.radius", "-", "circle radius", [](C& c, V v) { c.initial.radius = parse_real(v); }},
        {"initial.winding", "1", "circle winding number", [](C& c, V v) { c.initial.winding = detail::to_int(v); }},
        {"initial.path", "-", "snapshot CSV for from_file", [](C& c, V v) { c.initial.path = std::string(v); }},
        {"initial.sharp_file", "-", "sharp state file for sharp_recovery",
         [](C& c, V v) { c.initial.sharp_file = std::string(v); }},
        {"initial.eps", "model.eps", "eps of the recovery construction", [](C& c, V v) { c.initial.eps = parse_real(v); }},
        {"phase.kind", "initial", "initial (keep v of the initial data; circle: constant), two_interface, constant, from_file",
         [](C& c, V v) { c.phase.kind = detail::parse_phase_kind(v); }},
        {"phase.mean", "model.m or 0", "target mean of a two_interface phase", [](C& c, V v) { c.phase.mean = parse_real(v); }},
        {"phase.positions", "L/4,3L/4", "the two interface positions", [](C& c, V v) { c.phase.positions = parse_real_list(v); }},
        {"phase.width", "eps/sqrt(a)", "tanh width of the two_interface profile",
         [](C& c, V v) { c.phase.width = parse_real(v); }},
        {"phase.value", "1", "value of a constant phase", [](C& c, V v) { c.phase.value = parse_real(v); }},
        {"phase.path", "-", "snapshot CSV whose v column is used", [](C& c, V v) { c.phase.path = std::string(v); }},
        {"flow.dt", "0.001", "time step", [](C& c, V v) { c.flow.dt = parse_real(v); }},
        {"flow.max_steps", "10000", "step limit", [](C& c, V v) { c.flow.max_steps = parse_integer(v); }},
        {"flow.energy_tol", "1e-6", "stop when E decreases by less than energy_tol*dt ...",
         [](C& c, V v) { c.flow.energy_tol = parse_real(v); }},
        {"flow.patience", "10", "... for this many consecutive steps", [](C& c, V v) { c.flow.patience = detail::to_int(v); }},
        {"flow.stationary_tol", "1e-10", "stop at once when the state changes by less than stationary_tol*dt",
         [](C& c, V v) { c.flow.stationary_tol = parse_real(v); }},
        {"flow.closure_tol", "1e-8", "closure defect bound enforced by re-projection",
         [](C& c, V v) { c.flow.closure_tol = parse_real(v); }},
        {"flow.implicit_theta", "1", "implicitness of the stiff linear terms, in [0, 1]",
         [](C& c, V v) { c.flow.implicit_theta = parse_real(v); }},
        {"flow.projection_interval", "50", "steps between closure re-projections",
         [](C& c, V v) { c.flow.projection_interval = detail::to_int(v); }},
        {"flow.max_halvings", "8", "step halvings allowed before a run counts as blown up",
         [](C& c, V v) { c.flow.max_halvings = detail::to_int(v); }},
        {"flow.log_every", "1", "energy log cadence in steps", [](C& c, V v) { c.flow.log_every = parse_integer(v); }},
        {"output.directory", ".", "directory for CSV and SVG output", [](C& c, V v) { c.output.directory = std::string(v); }},
        {"output.snapshot_every", "0", "snapshot cadence in steps (0: first and last only)",
         [](C& c, V v) { c.output.snapshot_every = parse_integer(v); }},
        {"output.svg", "false", "write an SVG next to every snapshot", [](C& c, V v) { c.output.svg = parse_bool(v); }},
        {"sweep.eps", "-", "comma-separated, strictly decreasing eps values", [](C& c, V v) { c.sweep.eps = parse_real_list(v); }},
        {"sweep.sharp_file", "-", "sharp state file for sweeps", [](C& c, V v) { c.sweep.sharp_file = std::string(v); }},
        {"sweep.points_per_eps", "8", "grid policy: h <= eps / points_per_eps",
         [](C& c, V v) { c.sweep.grid.points_per_eps = parse_real(v); }},
        {"sweep.points_per_delta", "8", "grid policy: h <= delta_eps / points_per_delta",
         [](C& c, V v) { c.sweep.grid.points_per_delta = parse_real(v); }},
        {"sweep.min_points", "256", "grid policy: lower bound on n", [](C& c, V v) { c.sweep.grid.min_points = detail::to_int(v); }},
        {"sweep.relax", "false", "also relax each recovery by the flow", [](C& c, V v) { c.sweep.relax = parse_bool(v); }},
        {"recovery.patch_factor", "10", "closure patch half-width in transition collars",
         [](C& c, V v) { c.patch_factor = parse_real(v); }},
        {"detect.zero_band", "0.1", "|v| <= zero_band marks kink regions", [](C& c, V v) { c.detect.zero_band = parse_real(v); }},
        {"detect.interface_band", "0.5", "hysteresis band for sign changes",
         [](C& c, V v) { c.detect.interface_band = parse_real(v); }},
        {"detect.min_separation", "0", "merge interfaces closer than this", [](C& c, V v) { c.detect.min_separation = parse_real(v); }},
    };
    return keys;
}

inline std::string config_help() {
    std::ostringstream os;
    os << "Configuration keys (key = value, '#' comments):\n";
    for (const auto& k : config_keys()) os << "  " << k.key << " [" << k.fallback << "]  " << k.help << '\n';
    return os.str();
}

/// Parses a flat dotted key = value text.  Relative file paths are resolved
/// against base_dir and must exist.
inline ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {}) {
    ExperimentConfig cfg;
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        const auto end = text.find('\n', pos);
        std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
        pos = end == std::string_view::npos ? text.size() : end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = "config line " + std::to_string(line_no) + ": ";
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        const auto& keys = config_keys();
        const auto it = std::find_if(keys.begin(), keys.end(), [&](const ConfigKey& k) { return k.key == key; });
        if (it == keys.end()) throw ConfigError(where + "unknown key '" + std::string(key) + "'");
        if (cfg.keys.contains(key)) throw ConfigError(where + "duplicate key '" + std::string(key) + "'");
        if (value.empty()) throw ConfigError(where + "missing value for '" + std::string(key) + "'");
        try {
            it->set(cfg, value);
        } catch (const std::exception& e) {
            throw ConfigError(where + std::string(key) + ": " + e.what());
        }
        cfg.keys.emplace(key);
    }

    auto resolve = [&](std::string& p, const char* key) {
        if (p.empty()) return;
        std::filesystem::path path(p);
        if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
        if (!std::filesystem::exists(path)) throw ConfigError(std::string(key) + ": file '" + path.string() + "' does not exist");
        p = path.string();
    };
    resolve(cfg.initial.path, "initial.path");
    resolve(cfg.initial.sharp_file, "initial.sharp_file");
    resolve(cfg.phase.path, "phase.path");
    resolve(cfg.sweep.sharp_file, "sweep.sharp_file");

    try {
        cfg.model.validate();
        cfg.flow.validate();
        cfg.detect.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (cfg.n_points && *cfg.n_points < Grid::min_points)
        throw ConfigError("grid.n_points must be at least " + std::to_string(Grid::min_points));
    if (cfg.length && !(*cfg.length > 0.0)) throw ConfigError("grid.length must be positive");
    if (cfg.initial.kind == InitialKind::circle) {
        if (cfg.initial.radius) {
            if (!(*cfg.initial.radius > 0.0)) throw ConfigError("initial.radius must be positive");
            const double implied = two_pi * *cfg.initial.radius;
            if (cfg.length && std::abs(*cfg.length - implied) > 1e-9 * implied) {
                std::ostringstream os;
                os << "inconsistent circle: initial.radius = " << *cfg.initial.radius << " needs grid.length = "
                   << format_double(implied) << ", got " << *cfg.length;
                throw ConfigError(os.str());
            }
            cfg.length = implied;
        }
    } else if (cfg.initial.kind == InitialKind::from_file && cfg.initial.path.empty()) {
        throw ConfigError("initial.kind = from_file needs initial.path");
    } else if (cfg.initial.kind == InitialKind::sharp_recovery && cfg.initial.sharp_file.empty()) {
        throw ConfigError("initial.kind = sharp_recovery needs initial.sharp_file");
    }
    if (cfg.phase.kind == PhaseKind::from_file && cfg.phase.path.empty())
        throw ConfigError("phase.kind = from_file needs phase.path");
    if (!cfg.phase.positions.empty() && cfg.phase.positions.size() != 2)
        throw ConfigError("phase.positions needs exactly two values");
    if (cfg.output.snapshot_every < 0) throw ConfigError("output.snapshot_every must be non-negative");
    cfg.flow.snapshot_every = cfg.output.snapshot_every;
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    const std::string text = read_text_file(path);
    return parse_config(text, std::filesystem::path(path).parent_path());
}

}  // namespace kinkflow::io
