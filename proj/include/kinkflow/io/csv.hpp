#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "kinkflow/analysis.hpp"
#include "kinkflow/field_state.hpp"
#include "kinkflow/flow.hpp"
#include "kinkflow/io/format.hpp"
#include "kinkflow/io/sharp_file.hpp"

namespace kinkflow::io {

struct SnapshotRecord {
    long step = 0;
    double time = 0.0;
    EnergyBreakdown energy;
    FieldState state;
};

/// Snapshot CSV: '#'-prefixed key=value header lines, then columns t,u,v,x,y
/// with one row per node and the first node repeated at t = L (u shifted by
/// 2 pi w) to close the curve.
inline void write_snapshot(std::ostream& os, const SnapshotRecord& rec) {
    const FieldState& s = rec.state;
    os << "# step=" << rec.step << '\n'
       << "# time=" << format_double(rec.time) << '\n'
       << "# e_total=" << format_double(rec.energy.total) << '\n'
       << "# e_curvature=" << format_double(rec.energy.curvature) << '\n'
       << "# e_interface=" << format_double(rec.energy.interface) << '\n'
       << "# e_regularization=" << format_double(rec.energy.regularization) << '\n'
       << "# n_points=" << s.size() << '\n'
       << "# length=" << format_double(s.grid.length) << '\n'
       << "# winding=" << s.winding << '\n'
       << "t,u,v,x,y\n";
    const auto q = reconstruct_curve(s);
    for (int i = 0; i <= s.size(); ++i) {
        const int j = i == s.size() ? 0 : i;
        const double u = i == s.size() ? s.u[0] + two_pi * s.winding : s.u[j];
        os << format_double(i == s.size() ? s.grid.length : s.grid.node(i)) << ',' << format_double(u) << ','
           << format_double(s.v[j]) << ',' << format_double(q[i][0]) << ',' << format_double(q[i][1]) << '\n';
    }
}

inline SnapshotRecord parse_snapshot(std::string_view text) {
    std::map<std::string, std::string, std::less<>> header;
    std::vector<std::array<double, 5>> rows;
    bool columns_seen = false;
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        const auto end = text.find('\n', pos);
        const std::string_view line = trim(text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos));
        pos = end == std::string_view::npos ? text.size() : end + 1;
        ++line_no;
        if (line.empty()) continue;
        if (line.front() == '#') {
            const auto eq = line.find('=');
            if (eq != std::string_view::npos)
                header.emplace(std::string(trim(line.substr(1, eq - 1))), std::string(trim(line.substr(eq + 1))));
            continue;
        }
        if (!columns_seen) {
            if (line != "t,u,v,x,y") throw std::invalid_argument("snapshot: expected the column line t,u,v,x,y");
            columns_seen = true;
            continue;
        }
        const auto cells = split(line, ',');
        if (cells.size() != 5) throw std::invalid_argument("snapshot line " + std::to_string(line_no) + ": expected 5 columns");
        std::array<double, 5> r{};
        for (int k = 0; k < 5; ++k) r[k] = parse_real(cells[k]);
        rows.push_back(r);
    }
    if (rows.size() < Grid::min_points + 1) throw std::invalid_argument("snapshot: too few rows");
    const int n = static_cast<int>(rows.size()) - 1;
    const double L = rows.back()[0];
    auto get = [&](const char* key) -> const std::string* {
        const auto it = header.find(key);
        return it == header.end() ? nullptr : &it->second;
    };
    if (const auto* np = get("n_points"); np && parse_integer(*np) != n)
        throw std::invalid_argument("snapshot: row count does not match n_points + 1");
    SnapshotRecord rec;
    if (const auto* v = get("step")) rec.step = parse_integer(*v);
    if (const auto* v = get("time")) rec.time = parse_real(*v);
    if (const auto* v = get("e_total")) rec.energy.total = parse_real(*v);
    if (const auto* v = get("e_curvature")) rec.energy.curvature = parse_real(*v);
    if (const auto* v = get("e_interface")) rec.energy.interface = parse_real(*v);
    if (const auto* v = get("e_regularization")) rec.energy.regularization = parse_real(*v);
    const double shift = rows.back()[1] - rows.front()[1];
    const int winding = static_cast<int>(std::lround(shift / two_pi));
    if (std::abs(shift - two_pi * winding) > 1e-9) throw std::invalid_argument("snapshot: closing row is not a full turn");
    std::vector<double> u(n), v(n);
    for (int i = 0; i < n; ++i) {
        u[i] = rows[i][1];
        v[i] = rows[i][2];
    }
    rec.state = FieldState(Grid(n, L), std::move(u), winding, std::move(v));
    return rec;
}

inline SnapshotRecord load_snapshot(const std::string& path) {
    try {
        return parse_snapshot(read_text_file(path));
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

inline constexpr const char* energy_log_columns =
    "step,time,e_total,e_curvature,e_interface,e_regularization,mass_defect,closure_x,closure_y";

inline void write_energy_log(std::ostream& os, const std::vector<FlowLogEntry>& log) {
    os << energy_log_columns << '\n';
    for (const auto& e : log) {
        os << e.step << ',' << format_double(e.time) << ',' << format_double(e.energy.total) << ','
           << format_double(e.energy.curvature) << ',' << format_double(e.energy.interface) << ','
           << format_double(e.energy.regularization) << ',' << format_double(e.mass_defect) << ','
           << format_double(e.closure[0]) << ',' << format_double(e.closure[1]) << '\n';
    }
}

inline constexpr const char* sweep_columns =
    "eps,n_points,e_recovery_total,e_recovery_curv,e_recovery_int,e_recovery_reg,e_relaxed_total,e_sharp_total,gap";

/// Sweep table; e_relaxed_total is left empty for rows without relaxation.
inline void write_sweep(std::ostream& os, const SweepTable& table) {
    os << sweep_columns << '\n';
    for (const auto& r : table.rows) {
        os << format_double(r.eps) << ',' << r.n_points << ',' << format_double(r.e_recovery.total) << ','
           << format_double(r.e_recovery.curvature) << ',' << format_double(r.e_recovery.interface) << ','
           << format_double(r.e_recovery.regularization) << ','
           << (r.e_relaxed ? format_double(r.e_relaxed->total) : std::string()) << ','
           << format_double(r.e_sharp.total) << ',' << format_double(r.gap()) << '\n';
    }
}

}  // namespace kinkflow::io
