#pragma once

#include <stdexcept>
#include <string>

namespace magsim {

// Error taxonomy mirrors the CLI exit codes: config 2, data 3, estimation 4.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

struct EstimationError : std::runtime_error {
    explicit EstimationError(const std::string& what) : std::runtime_error(what) {}
};

// A move whose detour waypoint is itself blocked; carries the offending move.
struct UnreachablePlanError : std::runtime_error {
    int source_site;
    int target_site;
    UnreachablePlanError(const std::string& what, int source, int target)
        : std::runtime_error(what), source_site(source), target_site(target) {}
};

}  // namespace magsim
