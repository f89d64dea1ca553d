#pragma once

/// \file scenario.hpp
/// Scenario documents (one JSON file per experiment) and the subcommands
/// that run them.

#include "nslab/dynamics.hpp"
#include "nslab/hypersurface.hpp"
#include "nslab/linalg.hpp"
#include "nslab/tensorfields.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nslab {

struct ModelSpec {
    int n = 0;
    std::optional<std::string> L; ///< Lagrangian over x, v
    std::optional<std::string> H; ///< Hamiltonian over x, p
    Vec box_lo, box_hi;           ///< base-point sampling box
};

struct SurfaceSpec {
    std::vector<std::string> chart; ///< n expressions over y1..ym
    Vec lo, hi, base;
    double nu0 = 1.0;
    std::vector<int> counts; ///< grid nodes per parameter axis
};

struct RunSpec {
    double t_end = 1.0;
    double h = 1e-3;
    double delta = kSurfaceDelta;
    double t_limit = 0.0; ///< time bound for max_phi_t; 0 means t_end
    int points = 100;
    std::uint64_t seed = 1;
    double p_min = 0.5, p_max = 2.0; ///< momentum (or velocity) norm range for samples
    std::optional<Vec> x0, p0, v0;
};

/// Exactly one of `le` / `ge` is set.
struct Assertion {
    std::string metric;
    std::optional<double> le, ge;
};

struct Scenario {
    std::string name;
    ModelSpec model;
    std::vector<std::string> force; ///< empty means Q = 0
    std::vector<std::string> gamma; ///< empty means flat
    std::vector<std::string> shift; ///< connection shift T, optional
    std::optional<SurfaceSpec> surface;
    RunSpec run;
    std::vector<Assertion> asserts;
};

/// FileNotFound, ParseError (line and column of the JSON text) or
/// ValidationError naming the offending field. Expressions are parsed here
/// too so that malformed formulas fail before any computation.
Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const std::string& text);

/// Objects built from a validated scenario.
struct ScenarioModel {
    std::shared_ptr<const LagrangianModel> L;
    NewtonianSystem sys;
    ExtendedConnection gamma;
    std::optional<ConnectionShift> shift;
    std::optional<Hypersurface> surface;
};

ScenarioModel build_model(const Scenario& sc);

inline const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names = {"check-regularity", "simulate", "shift",   "residuals",
                                                   "invariance",       "identities", "nu"};
    return names;
}

struct RunOutput {
    /// name, metrics (in emission order), asserts with pass/fail, extra detail
    nlohmann::ordered_json summary;
    /// Additional files by name, written next to the summary.
    std::map<std::string, std::string> files;
    bool asserts_pass = true;
};

/// Runs one subcommand. Numeric failures propagate as NumericError.
RunOutput run_subcommand(const Scenario& sc, const std::string& subcommand);

} // namespace nslab
