#pragma once

#include <charconv>
#include <string>
#include <string_view>

namespace muvine::io {

/// Shortest decimal text that parses back to exactly `value`.
inline std::string format_double(double value) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, end);
}

/// Fixed-point text, for human-facing tables.
inline std::string format_fixed(double value, int precision) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, precision);
    return std::string(buf, end);
}

}  // namespace muvine::io
