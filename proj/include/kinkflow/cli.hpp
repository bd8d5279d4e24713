#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "kinkflow/analysis.hpp"
#include "kinkflow/energy.hpp"
#include "kinkflow/flow.hpp"
#include "kinkflow/io/config.hpp"
#include "kinkflow/io/csv.hpp"
#include "kinkflow/io/sharp_file.hpp"
#include "kinkflow/io/svg.hpp"
#include "kinkflow/recovery.hpp"

namespace kinkflow::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 2;
inline constexpr int exit_blow_up = 3;

/// Worker count for sweeps: the requested value (0: hardware concurrency)
/// capped by KINKFLOW_THREADS when that is set to a positive integer.
inline unsigned sweep_threads(unsigned requested) {
    unsigned n = requested > 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("KINKFLOW_THREADS")) {
        try {
            const long cap = io::parse_integer(env);
            if (cap > 0) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
        } catch (const std::invalid_argument&) {
        }
    }
    return n;
}

namespace detail {

inline void ensure_directory(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::invalid_argument("cannot create output directory '" + dir + "': " + ec.message());
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::invalid_argument("cannot write '" + path.string() + "'");
    return os;
}

inline void write_snapshot_files(const std::filesystem::path& dir, const std::string& stem, const io::SnapshotRecord& rec,
                                 bool svg) {
    {
        auto os = open_out(dir / (stem + ".csv"));
        io::write_snapshot(os, rec);
    }
    if (svg) {
        auto os = open_out(dir / (stem + ".svg"));
        io::write_svg(os, rec.state);
    }
}

inline std::string step_stem(long step) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "snapshot_%08ld", step);
    return buf;
}

inline double optional_length_check(const io::ExperimentConfig& cfg, double length, const char* source) {
    if (cfg.length && std::abs(*cfg.length - length) > 1e-9 * length)
        throw io::ConfigError(std::string("grid.length does not match the length of ") + source);
    return length;
}

/// v = tanh(d / width) with d the signed distance to the nearer of two
/// interfaces (positive between them), shifted to the requested mean.
inline std::vector<double> two_interface_phase(const Grid& g, double p0, double p1, double width, double mean) {
    if (!(p0 < p1)) throw io::ConfigError("phase.positions must be increasing");
    std::vector<double> v(g.size());
    for (int i = 0; i < g.n_points; ++i) {
        const double t = g.node(i);
        const double d0 = g.wrap_signed(t - p0), d1 = g.wrap_signed(p1 - t);
        const double inside = std::abs(d0) < std::abs(d1) ? d0 : d1;
        v[i] = std::tanh(inside / width);
    }
    double m = 0.0;
    for (double x : v) m += x;
    m /= g.n_points;
    for (double& x : v) x += mean - m;
    return v;
}

}  // namespace detail

/// Initial state described by the initial.* and phase.* keys.
inline FieldState initial_state(const io::ExperimentConfig& cfg) {
    FieldState s;
    const auto& in = cfg.initial;
    switch (in.kind) {
        case io::InitialKind::circle: {
            if (!in.radius) throw io::ConfigError("initial.kind = circle needs initial.radius");
            if (!cfg.n_points) throw io::ConfigError("initial.kind = circle needs grid.n_points");
            s = circle_state(Grid(*cfg.n_points, two_pi * *in.radius), cfg.phase.value, in.winding);
            break;
        }
        case io::InitialKind::from_file: {
            s = io::load_snapshot(in.path).state;
            if (cfg.n_points && *cfg.n_points != s.size()) throw io::ConfigError("grid.n_points does not match initial.path");
            detail::optional_length_check(cfg, s.grid.length, "initial.path");
            break;
        }
        case io::InitialKind::sharp_recovery: {
            const SharpState sharp = io::load_sharp(in.sharp_file);
            ModelParams p = cfg.model;
            p.eps = in.eps.value_or(cfg.model.eps);
            const double L = detail::optional_length_check(cfg, sharp.length(), "initial.sharp_file");
            const int n = cfg.n_points ? *cfg.n_points : cfg.sweep.grid.points(sharp, p.potential, p.eps);
            s = build_recovery(sharp, p.eps, Grid(n, L), p, cfg.patch_factor);
            break;
        }
    }
    const auto& ph = cfg.phase;
    switch (ph.kind) {
        case io::PhaseKind::initial: break;
        case io::PhaseKind::constant: std::fill(s.v.begin(), s.v.end(), ph.value); break;
        case io::PhaseKind::two_interface: {
            const double L = s.grid.length;
            const double p0 = ph.positions.empty() ? 0.25 * L : ph.positions[0];
            const double p1 = ph.positions.empty() ? 0.75 * L : ph.positions[1];
            const double width = ph.width.value_or(cfg.model.eps / std::sqrt(cfg.model.potential.scale));
            const double mean = ph.mean ? *ph.mean : cfg.model.mean();
            s.v = detail::two_interface_phase(s.grid, p0, p1, width, mean);
            break;
        }
        case io::PhaseKind::from_file: {
            auto snap = io::load_snapshot(ph.path);
            if (snap.state.size() != s.size()) throw io::ConfigError("phase.path has a different number of points");
            s.v = std::move(snap.state.v);
            break;
        }
    }
    return s;
}

inline int cmd_evolve(const io::ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
    FieldState s;
    std::filesystem::path dir;
    try {
        s = initial_state(cfg);
        if (cfg.model.volume_constraint_active) {
            const double defect = std::abs(s.mass() - cfg.model.mean() * s.grid.length);
            if (defect > 1e-10 * s.grid.length)
                throw io::ConfigError("initial phase violates the volume constraint (mass defect " +
                                      io::format_double(defect) + ")");
        }
        detail::ensure_directory(cfg.output.directory);
        dir = cfg.output.directory;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }
    FlowResult result;
    try {
        result = run_flow(s, cfg.model, cfg.flow, [&](long step, double time, const FieldState& st,
                                                      const EnergyBreakdown& e) {
            detail::write_snapshot_files(dir, detail::step_stem(step), {step, time, e, st}, cfg.output.svg);
        });
        auto os = detail::open_out(dir / "energy.csv");
        io::write_energy_log(os, result.energy_log);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }
    const auto& last = result.energy_log.back();
    out << "stop_reason=" << to_string(result.stop_reason) << '\n'
        << "steps=" << result.steps << '\n'
        << "rejected_steps=" << result.rejected_steps << '\n'
        << "e_total=" << io::format_double(last.energy.total) << '\n';
    if (result.stop_reason == StopReason::blow_up) {
        err << "error: flow blew up: " << result.message << '\n';
        return exit_blow_up;
    }
    return exit_ok;
}

struct SweepRequest {
    std::vector<double> eps;  // overrides sweep.eps when non-empty
    std::string sharp_file;   // overrides sweep.sharp_file when non-empty
    std::string output;       // default <output.directory>/sweep.csv
    unsigned threads = 0;
};

inline int cmd_sweep(const io::ExperimentConfig& cfg, const SweepRequest& req, std::ostream& out, std::ostream& err) {
    SweepTable table;
    std::filesystem::path path;
    try {
        const auto eps = req.eps.empty() ? cfg.sweep.eps : req.eps;
        if (eps.empty()) throw io::ConfigError("no eps values given (--eps or sweep.eps)");
        const auto file = req.sharp_file.empty() ? cfg.sweep.sharp_file : req.sharp_file;
        if (file.empty()) throw io::ConfigError("no sharp state given (--sharp or sweep.sharp_file)");
        const SharpState sharp = io::load_sharp(file);
        SweepOptions opt;
        opt.grid = cfg.sweep.grid;
        opt.relax = cfg.sweep.relax;
        opt.flow = cfg.flow;
        opt.patch_factor = cfg.patch_factor;
        opt.threads = sweep_threads(req.threads);
        if (req.output.empty()) {
            detail::ensure_directory(cfg.output.directory);
            path = std::filesystem::path(cfg.output.directory) / "sweep.csv";
        } else {
            path = req.output;
        }
        table = gamma_sweep(sharp, eps, cfg.model, opt);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }
    try {
        auto os = detail::open_out(path);
        io::write_sweep(os, table);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }
    io::write_sweep(out, table);
    for (const auto& r : table.rows)
        if (r.relax_stop == StopReason::blow_up) {
            err << "error: relaxation blew up at eps = " << io::format_double(r.eps) << '\n';
            return exit_blow_up;
        }
    return exit_ok;
}

struct RecoverRequest {
    std::string sharp_file;     // overrides initial.sharp_file
    std::optional<double> eps;  // overrides initial.eps / model.eps
    std::string output;         // default <output.directory>/recovery.csv
};

inline int cmd_recover(const io::ExperimentConfig& cfg, const RecoverRequest& req, std::ostream& out, std::ostream& err) {
    try {
        const auto file = req.sharp_file.empty() ? cfg.initial.sharp_file : req.sharp_file;
        if (file.empty()) throw io::ConfigError("no sharp state given (--sharp or initial.sharp_file)");
        const SharpState sharp = io::load_sharp(file);
        ModelParams p = cfg.model;
        p.eps = req.eps ? *req.eps : cfg.initial.eps.value_or(cfg.model.eps);
        p.validate();
        const double L = detail::optional_length_check(cfg, sharp.length(), "the sharp state");
        const int n = cfg.n_points ? *cfg.n_points : cfg.sweep.grid.points(sharp, p.potential, p.eps);
        const FieldState s = build_recovery(sharp, p.eps, Grid(n, L), p, cfg.patch_factor);
        const auto e = energy_eps(s, p);
        std::filesystem::path path = req.output;
        if (path.empty()) {
            detail::ensure_directory(cfg.output.directory);
            path = std::filesystem::path(cfg.output.directory) / "recovery.csv";
        }
        {
            auto os = detail::open_out(path);
            io::write_snapshot(os, {0, 0.0, e, s});
        }
        if (cfg.output.svg) {
            auto svg = path;
            svg.replace_extension(".svg");
            auto os = detail::open_out(svg);
            io::write_svg(os, s);
        }
        out << "eps=" << io::format_double(p.eps) << '\n'
            << "n_points=" << n << '\n'
            << "e_total=" << io::format_double(e.total) << '\n'
            << "e_sharp_total=" << io::format_double(energy_sharp(sharp, p).total) << '\n';
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }
    return exit_ok;
}

inline int cmd_energy(const io::ExperimentConfig& cfg, const std::string& state_file, std::ostream& out,
                      std::ostream& err) {
    try {
        if (state_file.empty()) throw io::ConfigError("no state file given (--state)");
        const auto rec = io::load_snapshot(state_file);
        const auto e = energy_eps(rec.state, cfg.model);
        out << "e_total=" << io::format_double(e.total) << '\n'
            << "e_curvature=" << io::format_double(e.curvature) << '\n'
            << "e_interface=" << io::format_double(e.interface) << '\n'
            << "e_regularization=" << io::format_double(e.regularization) << '\n';
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }
    return exit_ok;
}

}  // namespace kinkflow::cli
