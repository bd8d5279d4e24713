#pragma once

#include <charconv>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace kinkflow::io {

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double x) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const auto next = s.find(sep, pos);
        out.push_back(trim(s.substr(pos, next - pos)));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return out;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos < s.size()) {
        const auto b = s.find_first_not_of(" \t\r", pos);
        if (b == std::string_view::npos) break;
        const auto e = s.find_first_of(" \t\r", b);
        out.push_back(s.substr(b, e - b));
        pos = e == std::string_view::npos ? s.size() : e;
    }
    return out;
}

inline bool parse_plain_double(std::string_view s, double& out) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
    return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

/// A real number, optionally written with pi: "0.5", "pi", "-2pi", "3*pi/4", "pi/2".
inline double parse_real(std::string_view text) {
    const std::string_view s = trim(text);
    double x = 0.0;
    if (parse_plain_double(s, x)) return x;
    const auto at = s.find("pi");
    if (at != std::string_view::npos) {
        std::string_view head = s.substr(0, at), tail = s.substr(at + 2);
        double factor = 1.0, divisor = 1.0;
        if (!head.empty() && head.back() == '*') head.remove_suffix(1);
        bool ok = true;
        if (head == "-")
            factor = -1.0;
        else if (!head.empty() && head != "+")
            ok = parse_plain_double(head, factor);
        if (ok && !tail.empty()) ok = tail.front() == '/' && parse_plain_double(tail.substr(1), divisor);
        if (ok && divisor != 0.0) return factor * 3.141592653589793238462643383279502884 / divisor;
    }
    throw std::invalid_argument("malformed number '" + std::string(s) + "'");
}

inline long parse_integer(std::string_view text) {
    const std::string_view s = trim(text);
    long x = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw std::invalid_argument("malformed integer '" + std::string(s) + "'");
    return x;
}

inline bool parse_bool(std::string_view text) {
    const std::string_view s = trim(text);
    if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
    if (s == "false" || s == "no" || s == "off" || s == "0") return false;
    throw std::invalid_argument("malformed boolean '" + std::string(s) + "'");
}

inline std::vector<double> parse_real_list(std::string_view text) {
    std::vector<double> out;
    if (trim(text).empty()) return out;
    for (auto item : split(text, ',')) out.push_back(parse_real(item));
    return out;
}

}  // namespace kinkflow::io
