#pragma once

#include <string>

#include "magsim/engine.hpp"

namespace magsim {

// Line-oriented tabular dataset, schema v1. Header lines start with '#' and
// carry the schema version, config hash, seed, grid or probe positions, and
// units; one record per line:
//   cycle site_or_position T_seconds test_on occupied_before detected_after
// Diagnostic mode appends the hidden-truth columns prepared/ended_down and the
// per-site light-shift truth. Files are written atomically (temp + rename).
void write_dataset(const std::string& path, const Dataset& dataset, bool diagnostic = false);

// Throws DataError with the offending line number on malformed input.
Dataset read_dataset(const std::string& path);

// Atomic text write used by all report emitters.
void atomic_write_text(const std::string& path, const std::string& content);

}  // namespace magsim
