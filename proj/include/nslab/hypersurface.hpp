#pragma once

/// \file hypersurface.hpp
/// Parametric hypersurfaces x(y), y in R^m with m = n - 1, their normal
/// covectors, the Pfaff system for the momentum factor nu in p = nu * n,
/// shifts of a hypersurface along trajectories and the second fundamental
/// form of the momentum lift.

#include "nslab/dynamics.hpp"
#include "nslab/expression.hpp"
#include "nslab/linalg.hpp"
#include "nslab/tensorfields.hpp"

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace nslab {

/// Spacing for finite differences in the surface parameters.
inline constexpr double kSurfaceDelta = 1e-4;

class Hypersurface {
public:
    /// `chart` holds n expressions over y1..ym. `base` must lie in [lo, hi].
    Hypersurface(int n, std::vector<Expr> chart, Vec lo, Vec hi, Vec base);
    static Hypersurface parse(int n, const std::vector<std::string>& chart, Vec lo, Vec hi, Vec base);

    int dim() const { return n_; }
    int params() const { return n_ - 1; }
    const Vec& lo() const { return lo_; }
    const Vec& hi() const { return hi_; }
    const Vec& base() const { return base_; }
    const std::vector<Expr>& chart() const { return chart_; }

    Vec point(const Vec& y) const;
    /// tau(s, i) = dx^s/dy^i; no rank check.
    Mat frame(const Vec& y) const;
    /// Unnormalized normal: N_s = det[e_s, tau_1, ..., tau_m], times the base orientation.
    Vec raw_normal(const Vec& y) const;

private:
    int n_;
    std::vector<Expr> chart_;
    Vec lo_, hi_, base_;
    CompiledBatch point_, frame_;
    double orientation_ = 1.0;
};

/// Frame with a rank check (RankDeficient when rank < m).
Mat tangent_frame(const Hypersurface& S, const Vec& y);

/// Unit covector annihilating the tangent frame; sign fixed so that the first
/// nonzero component is positive at the base point and continuous from there.
Vec normal_covector(const Hypersurface& S, const Vec& y);

/// Regular grid over a parameter box, axis 0 varying slowest.
struct ParamGrid {
    Vec lo, hi;
    std::vector<int> counts;

    static ParamGrid uniform(const Vec& lo, const Vec& hi, int per_axis);

    int axes() const { return static_cast<int>(counts.size()); }
    std::size_t size() const;
    double coordinate(int axis, int index) const;
    double spacing(int axis) const;
    std::vector<int> unflatten(std::size_t flat) const;
    std::size_t flatten(const std::vector<int>& idx) const;
    Vec node(std::size_t flat) const;
};

struct NuField {
    ParamGrid grid;
    std::vector<double> nu; ///< one value per grid node
    Vec base;               ///< y0
    double nu0 = 1.0;
    /// max |nu| difference between the two axis orders (grid solver only)
    double path_discrepancy = 0.0;
};

/// psi_i(nu, y) = -(nu^2/Omega) sum_s dn_s/dy^i dH/dp_s - nu sum_s (dH/dx^s / Omega - Q_s) tau^s_i
/// with H, Omega, Q at (x(y), nu n(y)) and dn/dy by central differences.
Vec pfaff_rhs(const Hypersurface& S, const NewtonianSystem& sys, double nu, const Vec& y);

/// nu at y + step * e_axis by one RK4 step of the Pfaff equation along that axis.
double nu_step(const Hypersurface& S, const NewtonianSystem& sys, double nu, const Vec& y, int axis, double step);

/// n = 2: integrate the single Pfaff equation by RK4 from the base point over
/// `count` nodes of the parameter interval.
NuField solve_nu_curve(const Hypersurface& S, const NewtonianSystem& sys, double nu0, int count = 201);

/// n >= 3: integrate axis by axis from the base point (axis 1 first), then in
/// the reverse axis order, and record the largest difference.
NuField solve_nu_grid(const Hypersurface& S, const NewtonianSystem& sys, double nu0, const std::vector<int>& counts);

/// theta_ij - theta_ji where theta_ij = d psi_i/dy^j + d psi_i/d nu * psi_j,
/// with the y- and nu-derivatives by fourth-order central differences.
Mat pfaff_compatibility_residual(const Hypersurface& S, const NewtonianSystem& sys, double nu, const Vec& y);
Mat pfaff_compatibility_residual(const Hypersurface& S, const NewtonianSystem& sys, const NuField& field,
                                 std::size_t node);

/// d phi_i/dt at t = 0 evaluated from the nu values on the grid (fourth-order
/// differences over five neighbouring nodes, one-sided at the box edges).
Vec initial_deviation_rate(const Hypersurface& S, const NewtonianSystem& sys, const NuField& field, std::size_t node);

struct ShiftFamily {
    ParamGrid grid;
    int n = 0;
    int m = 0;
    double h = 0.0;
    double delta = kSurfaceDelta;
    std::vector<double> t;
    std::vector<std::vector<Vec>> x, p; ///< [node][step], central trajectories
    /// [node][step * m + i] = phi_i
    std::vector<std::vector<double>> phi;

    /// max over nodes, steps with t <= t_limit and i of |phi_i|.
    double max_phi(double t_limit = std::numeric_limits<double>::infinity()) const;

    /// Columns t, y_index, x1..xn, p1..pn, phi1..phim; one row per node and step.
    void write_csv(std::ostream& out) const;
};

/// Shift of S along trajectories started at (x(y), nu(y) n(y)) for every grid
/// node. tau_i(t) comes from two satellite trajectories started at y +- delta e_i
/// (nu there by one Pfaff step), phi_i = <p | tau_i>.
ShiftFamily run_shift(const Hypersurface& S, const NewtonianSystem& sys, const NuField& field, double t_end,
                      double h = 1e-3, double delta = kSurfaceDelta);

struct SecondFundamentalForm {
    Mat b;    ///< outer components b_ij
    Mat beta; ///< inner components beta_ij = b(tau_i, tau_j)
    double symmetry_defect = 0.0; ///< max |b_ij - b_ji|
};

/// b = -P^T F T^+ P with F(r, j) = nabla_{tau_j} p_r, T the tangent frame and
/// P the projector at (x(y), nu n(y)). dp/dy uses fourth-order central
/// differences with nu off the point from Pfaff steps.
SecondFundamentalForm second_fundamental_form(const Hypersurface& S, const NewtonianSystem& sys, double nu,
                                              const ExtendedConnection& gamma, const Vec& y);
SecondFundamentalForm second_fundamental_form(const Hypersurface& S, const NewtonianSystem& sys, const NuField& field,
                                              const ExtendedConnection& gamma, std::size_t node);

struct PrescribedSurface {
    Hypersurface surface;
    Mat basis;      ///< columns E_1..E_n of the adapted coordinates
    double nu_base; ///< nu with nu * n(0) = p
};

/// Graph surface x(y) = x0 + sum y^i E_i + z(y) E_n, z = (1/(2 nu0)) sum beta_ij y^i y^j,
/// where E_1..E_m is an orthonormal basis of ker p and E_n = nu0 p / |p|^2.
/// Its lift through p at y = 0 has inner second fundamental form beta.
PrescribedSurface surface_with_prescribed_form(const Vec& x0, const Vec& p, const Mat& beta, double nu0,
                                               double radius = 0.5);

} // namespace nslab
