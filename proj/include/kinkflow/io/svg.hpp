#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "kinkflow/field_state.hpp"
#include "kinkflow/io/format.hpp"

namespace kinkflow::io {

/// Diverging map: v = -1 blue, 0 near white, +1 red; clamped outside [-1, 1].
inline std::string diverging_color(double v) {
    static constexpr std::array<double, 3> lo{33, 102, 172}, mid{247, 247, 247}, hi{178, 24, 43};
    const double x = std::clamp(v, -1.0, 1.0);
    const auto& end = x < 0.0 ? lo : hi;
    const double w = std::abs(x);
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround(mid[0] + w * (end[0] - mid[0]))),
                  static_cast<int>(std::lround(mid[1] + w * (end[1] - mid[1]))),
                  static_cast<int>(std::lround(mid[2] + w * (end[2] - mid[2]))));
    return buf;
}

/// The reconstructed curve as one closed path, overlaid with one line per
/// edge coloured by the mean of v at its ends.  The view box fits the curve
/// with a 5% margin; y points up.
inline void write_svg(std::ostream& os, const FieldState& s) {
    const auto q = reconstruct_curve(s);
    double xmin = q[0][0], xmax = q[0][0], ymin = q[0][1], ymax = q[0][1];
    for (const auto& p : q) {
        xmin = std::min(xmin, p[0]);
        xmax = std::max(xmax, p[0]);
        ymin = std::min(ymin, p[1]);
        ymax = std::max(ymax, p[1]);
    }
    const double extent = std::max({xmax - xmin, ymax - ymin, 1e-12});
    const double margin = 0.05 * extent;
    const double stroke = 0.004 * extent;
    auto X = [&](double x) { return format_double(x); };
    auto Y = [&](double y) { return format_double(-y); };
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << X(xmin - margin) << ' ' << Y(ymax + margin) << ' '
       << format_double(xmax - xmin + 2.0 * margin) << ' ' << format_double(ymax - ymin + 2.0 * margin) << "\">\n";
    os << "<path fill=\"none\" stroke=\"#999999\" stroke-width=\"" << format_double(stroke) << "\" d=\"M "
       << X(q[0][0]) << ' ' << Y(q[0][1]);
    for (int i = 1; i < s.size(); ++i) os << " L " << X(q[i][0]) << ' ' << Y(q[i][1]);
    os << " Z\"/>\n<g stroke-width=\"" << format_double(2.0 * stroke) << "\" stroke-linecap=\"round\">\n";
    for (int i = 0; i < s.size(); ++i) {
        const int j = i + 1 == s.size() ? 0 : i + 1;
        os << "<line x1=\"" << X(q[i][0]) << "\" y1=\"" << Y(q[i][1]) << "\" x2=\"" << X(q[i + 1][0]) << "\" y2=\""
           << Y(q[i + 1][1]) << "\" stroke=\"" << diverging_color(0.5 * (s.v[i] + s.v[j])) << "\"/>\n";
    }
    os << "</g>\n</svg>\n";
}

}  // namespace kinkflow::io
