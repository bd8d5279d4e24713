#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "kinkflow/io/format.hpp"
#include "kinkflow/sharp_state.hpp"

namespace kinkflow::io {

/// Text form of a SharpState, one record per line:
///
///   segment <length> <phase> <k_1> [<k_2> ...]
///   junction <jump> <kind> [<turn>]
///
/// Junction i follows segment i.  '#' starts a comment.
inline SharpState parse_sharp(std::string_view text) {
    SharpState s;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = text.find('\n', pos);
        std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
        pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const auto tok = split_ws(line);
        if (tok.empty()) continue;
        const std::string where = "sharp file line " + std::to_string(line_no) + ": ";
        try {
            if (tok[0] == "segment") {
                if (tok.size() < 4) throw std::invalid_argument("segment needs length, phase and curvature samples");
                if (s.segments.size() != s.junctions.size() && !s.junctions.empty())
                    throw std::invalid_argument("segment without a preceding junction");
                Segment seg;
                seg.length = parse_real(tok[1]);
                seg.phase = static_cast<int>(parse_integer(tok[2]));
                for (std::size_t k = 3; k < tok.size(); ++k) seg.curvature_profile.push_back(parse_real(tok[k]));
                s.segments.push_back(std::move(seg));
            } else if (tok[0] == "junction") {
                if (tok.size() < 3 || tok.size() > 4) throw std::invalid_argument("junction needs jump, kind and optional turn");
                if (s.junctions.size() + 1 != s.segments.size())
                    throw std::invalid_argument("junction must follow its segment");
                Junction j;
                j.jump = parse_real(tok[1]);
                j.kind = parse_junction_kind(tok[2]);
                if (tok.size() == 4) j.turn = static_cast<int>(parse_integer(tok[3]));
                s.junctions.push_back(j);
            } else {
                throw std::invalid_argument("unknown record '" + std::string(tok[0]) + "'");
            }
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(where + e.what());
        }
    }
    validate_structure(s);
    return s;
}

inline std::string format_sharp(const SharpState& s) {
    std::ostringstream os;
    for (std::size_t i = 0; i < s.segments.size(); ++i) {
        const auto& seg = s.segments[i];
        os << "segment " << format_double(seg.length) << ' ' << seg.phase;
        for (double k : seg.curvature_profile) os << ' ' << format_double(k);
        os << '\n';
        if (i < s.junctions.size()) {
            const auto& j = s.junctions[i];
            os << "junction " << format_double(j.jump) << ' ' << to_string(j.kind) << ' ' << j.turn << '\n';
        }
    }
    return os.str();
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline SharpState load_sharp(const std::string& path) {
    try {
        return parse_sharp(read_text_file(path));
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

}  // namespace kinkflow::io
