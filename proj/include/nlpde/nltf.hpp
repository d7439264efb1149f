#pragma once

#include <string>

#include "nlpde/grid.hpp"

namespace nlpde {

/// Binary triangle-field format "NLTF": magic `NLTF`, version byte 0x01,
/// little-endian u64 header {n_tau, d, n_y, r, m}, then f64 payload ordered
/// (i ascending, j = 0..i, spatial index row-major per axis, component).
/// A JSON sidecar `<path>.meta.json` carries T, L, and a problem identifier.
void write_nltf(const std::string& path, const TriangleField& field,
                const std::string& problem_id);

TriangleField read_nltf(const std::string& path);

} // namespace nlpde
