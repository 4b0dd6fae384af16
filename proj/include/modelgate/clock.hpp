#pragma once

#include <cstdint>
#include <functional>
#include <string>

namespace modelgate {

/// Microseconds since the Unix epoch.
using Clock = std::function<std::int64_t()>;

std::int64_t system_micros();

/// "YYYY-MM-DDTHH:MM:SS.ffffffZ"
std::string format_timestamp(std::int64_t micros);

/// Inverse of format_timestamp; throws std::invalid_argument.
std::int64_t parse_timestamp(const std::string& text);

}  // namespace modelgate
