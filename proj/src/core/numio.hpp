#pragma once

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <string>
#include <string_view>

namespace featkit {

/// Shortest decimal text that parses back to the same double. Keeps printed
/// models and traces byte-stable across print/parse cycles.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline bool parse_double(std::string_view text, double& out) {
    if (text.empty()) return false;
    // from_chars in libstdc++ 11 handles "1e-05" but not leading '+'.
    size_t off = 0;
    bool neg = false;
    if (text[0] == '+' || text[0] == '-') {
        neg = text[0] == '-';
        off = 1;
    }
    double mag = 0;
    auto res = std::from_chars(text.data() + off, text.data() + text.size(), mag);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return false;
    out = neg ? -mag : mag;
    return true;
}

}  // namespace featkit
