#pragma once

/// \file report.hpp
/// Deterministic number formatting and result files.

#include "nslab/hypersurface.hpp"
#include "nslab/linalg.hpp"
#include "nslab/normality.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>

namespace nslab {

/// Shortest text that reads back to the same double ("nan", "inf", "-inf"
/// for non-finite values).
std::string format_double(double v);

/// JSON arrays; non-finite entries become null.
nlohmann::ordered_json to_json(const Vec& v);
nlohmann::ordered_json to_json(const Mat& m); ///< array of rows

/// Seed, per-point coordinates, residual components and their max-norms.
nlohmann::ordered_json residual_report_json(const ResidualReport& r, std::uint64_t seed);

/// Columns point, weakA, weakB, addSym, addProj (max-norms; empty for n < 3).
std::string residual_report_csv(const ResidualReport& r);

/// Columns node, y1..ym, nu.
std::string nu_field_csv(const NuField& f);

std::string shift_csv(const ShiftFamily& s);

} // namespace nslab
