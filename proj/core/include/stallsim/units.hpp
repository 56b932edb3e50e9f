#pragma once

namespace stallsim::units {

// Catalog files carry bandwidths in Gbps; everything internal is bytes/second.
inline constexpr double bytes_per_second_per_gbps = 1.25e8;

// Disk throughput is catalogued in MB/s (decimal megabytes).
inline constexpr double bytes_per_second_per_mbps = 1e6;

// Memory sizes are catalogued in GiB.
inline constexpr double bytes_per_gib = 1024.0 * 1024.0 * 1024.0;

inline constexpr double seconds_per_microsecond = 1e-6;
inline constexpr double seconds_per_hour = 3600.0;

constexpr double gbps_to_bytes_per_second(double gbps) {
    return gbps * bytes_per_second_per_gbps;
}

constexpr double mbps_to_bytes_per_second(double mbps) {
    return mbps * bytes_per_second_per_mbps;
}

constexpr double gib_to_bytes(double gib) {
    return gib * bytes_per_gib;
}

constexpr double microseconds_to_seconds(double us) {
    return us * seconds_per_microsecond;
}

} // namespace stallsim::units
