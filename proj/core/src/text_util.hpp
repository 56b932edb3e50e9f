#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace stallsim::detail {

// Shortest round-trip decimal form; locale-independent, so repeated runs
// emit identical bytes.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

} // namespace stallsim::detail
