#pragma once

#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>

namespace qqm {

/// Shortest decimal text that parses back to the same double. Plain
/// notation when 1e-5 <= |v| < 1e15, scientific outside.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[400];
    const double a = std::abs(v);
    const auto fmt = (a == 0.0 || (a >= 1e-5 && a < 1e15)) ? std::chars_format::fixed
                                                          : std::chars_format::scientific;
    auto res = std::to_chars(buf, buf + sizeof buf, v, fmt);
    return std::string(buf, res.ptr);
}

/// Parses the whole of `text` as a decimal number (no surrounding whitespace).
inline std::optional<double> parse_number(std::string_view text) {
    if (text.empty()) return std::nullopt;
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (*first == '+') ++first;
    auto res = std::from_chars(first, last, v, std::chars_format::general);
    if (res.ec != std::errc{} || res.ptr != last) return std::nullopt;
    return v;
}

} // namespace qqm
