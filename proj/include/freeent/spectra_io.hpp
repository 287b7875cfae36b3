#pragma once

#include <string>

#include "freeent/spectra.hpp"
#include "json.hpp"

namespace freeent {

/// Measure documents:
///   {"kind": "semicircle", "variance": v, "mean": m}      (mean optional, default 0)
///   {"kind": "uniform", "lo": a, "hi": b}
///   {"kind": "arcsine", "lo": a, "hi": b}
///   {"kind": "atomic", "atoms": [[x, w], ...]}
///   {"kind": "gridded", "lo": a, "hi": b, "values": [p0, ..., pN]}
/// Throws std::invalid_argument on malformed documents.
SpectralMeasure measure_from_json(const nlohmann::json& doc);
nlohmann::json measure_to_json(const SpectralMeasure& mu);

/// Map specifications "identity", "affine:a,b", "poly:c0,c1,...", "arctan:s",
/// sampled on [lo, hi].
ScalarField map_from_string(const std::string& spec, double lo, double hi);

}  // namespace freeent
