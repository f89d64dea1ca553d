#pragma once

/// \file dynamics.hpp
/// Newtonian systems in relative form and fixed-step RK4 trajectories in
/// both representations.
///
/// Momentum form:  dx/dt = H_p / Omega,  dp/dt = -H_x / Omega + Q.
/// Velocity form:  dx/dt = v / Omega,    d/dt L_v - L_x / Omega = Q.

#include "nslab/calculus.hpp"
#include "nslab/expression.hpp"
#include "nslab/linalg.hpp"
#include "nslab/tensorfields.hpp"

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace nslab {

/// Q and its first partials at a momentum point. dx(i, r) = dQ_i/dx^r,
/// dp(i, r) = dQ_i/dp_r.
struct ForceJet {
    Vec Q;
    Mat dx, dp;
};

/// Q and its first partials at a velocity point, with Q composed with lambda.
/// dv(i, r) = dQ_i/dv^r and dx is taken at fixed v.
struct ForceJetV {
    Vec Q;
    Mat dx, dv;
};

class ForceField {
public:
    /// Components over (x, p).
    ForceField(int n, std::vector<Expr> q);
    static ForceField zero(int n);
    static ForceField parse(int n, const std::vector<std::string>& texts);

    /// Q read off the velocity form from a prescribed acceleration dv/dt = a(x, v):
    /// Q_i = g_ij a^j + (d2L/dv^i dx^j) v^j / Omega - (dL/dx^i) / Omega.
    /// The result is stored in the velocity representation and evaluated at
    /// momentum points through the inverse Legendre map.
    static ForceField from_acceleration(std::shared_ptr<const LagrangianModel> L, std::vector<Expr> accel);

    int dim() const { return n_; }
    bool velocity_authored() const { return velocity_; }
    /// Components in their authored representation.
    const std::vector<Expr>& components() const { return q_; }
    bool is_zero() const { return zero_; }

    ForceJet eval(const CotangentState& c, const LagrangianModel* L = nullptr) const;
    ForceJetV eval(const TangentState& q, const LagrangianModel& L) const;

private:
    ForceField() = default;
    int n_ = 0;
    bool velocity_ = false;
    bool zero_ = true;
    std::vector<Expr> q_;
    std::shared_ptr<const LagrangianModel> L_;
    CompiledBatch batch_; // Q, dQ/dx, dQ/dfiber
};

class NewtonianSystem {
public:
    NewtonianSystem(HamiltonianModel H, ForceField Q);

    int dim() const { return H_.dim(); }
    const HamiltonianModel& hamiltonian() const { return H_; }
    const ForceField& force() const { return Q_; }
    /// Backing Lagrangian, if any.
    const LagrangianModel* lagrangian() const { return H_.lagrangian(); }

    ForceJet force_at(const CotangentState& c) const { return Q_.eval(c, lagrangian()); }

private:
    HamiltonianModel H_;
    ForceField Q_;
};

struct PhaseVelocity {
    Vec dx;
    Vec dfiber;
};

PhaseVelocity rhs_p(const NewtonianSystem& sys, const CotangentState& c);
PhaseVelocity rhs_v(const NewtonianSystem& sys, const TangentState& q);

struct Trajectory {
    Representation rep = Representation::Momentum;
    double h = 0.0;
    std::vector<double> t;
    std::vector<Vec> x;
    std::vector<Vec> fiber; ///< p or v

    std::size_t size() const { return t.size(); }
    CotangentState cotangent(std::size_t k) const { return {x[k], fiber[k]}; }
    TangentState tangent(std::size_t k) const { return {x[k], fiber[k]}; }

    /// Header t,x1..xn,p1..pn (or v1..vn).
    void write_csv(std::ostream& out) const;
};

/// The step is adjusted to t_end / round(t_end / h) so the grid is uniform
/// and ends exactly at t_end.
Trajectory integrate(const NewtonianSystem& sys, const CotangentState& init, double t_end, double h = 1e-3);
Trajectory integrate(const NewtonianSystem& sys, const TangentState& init, double t_end, double h = 1e-3);

/// Number of steps and step size actually used for (t_end, h).
std::pair<int, double> step_grid(double t_end, double h);

/// One classical RK4 step of y' = f(t, y).
template <typename F>
Vec rk4_step(F&& f, double t, const Vec& y, double h) {
    Vec k1 = f(t, y);
    Vec k2 = f(t + 0.5 * h, Vec(y + 0.5 * h * k1));
    Vec k3 = f(t + 0.5 * h, Vec(y + 0.5 * h * k2));
    Vec k4 = f(t + h, Vec(y + h * k3));
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Rethrow a numeric failure with the time at which it happened.
[[noreturn]] void rethrow_at_time(double t);

} // namespace nslab
