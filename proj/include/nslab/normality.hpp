#pragma once

/// \file normality.hpp
/// Residuals of the weak and additional normality equations for a force
/// field Q relative to a Hamiltonian H, the linearized (variational)
/// dynamics and the second-order ODE for deviation functions.

#include "nslab/dynamics.hpp"
#include "nslab/hypersurface.hpp"
#include "nslab/tensorfields.hpp"

#include <vector>

namespace nslab {

/// Covariant first derivatives of H, Omega and Q at one cotangent point.
/// Index order: grad_Q(r, s) = nabla_r Q_s, vgrad_Q(r, s) = d Q_s / d p_r,
/// grad_vgrad_H(r, q) = nabla_r of the vector dH/dp_q.
struct PointGradients {
    Vec x, p;
    HamiltonJet h;
    double omega = 0.0;
    Vec Q;
    Vec grad_H, grad_omega, vgrad_omega;
    Mat grad_Q, vgrad_Q, grad_vgrad_H;
    Vec p_up;             ///< p^q = g^{qk} p_k with g^{qk} = d2H/dp_q dp_k
    double p_norm2 = 0.0; ///< <p | p^q>, not necessarily positive
    Mat P;                ///< projector, P(r, s) = P^r_s
};

/// ZeroMomentum when p = 0, DegenerateOmega when |Omega| <= 1e-14.
PointGradients point_gradients(const NewtonianSystem& sys, const ExtendedConnection& gamma, const CotangentState& c);

struct WeakResiduals {
    Vec weakA;         ///< components of P alpha, written with the sign of the printed equation
    Vec weakB;         ///< eta o P, eta built from beta and alpha
    Vec weakB_printed; ///< the expanded form with +(nabla_r Omega / Omega) Q_s in the first group
};

WeakResiduals weak_residuals(const NewtonianSystem& sys, const ExtendedConnection& gamma, const CotangentState& c);

struct OperatorB {
    Mat B;               ///< B(r, s) = B^r_s
    double lambda_B = 0; ///< tr B / (n - 1)
};

struct AdditionalResiduals {
    Mat addSym;  ///< (E_rs - E_sr) contracted with P on both free indices
    OperatorB opB;
    Mat addProj; ///< B - lambda_B P
};

/// n >= 3 only (DimensionTooSmall otherwise).
AdditionalResiduals additional_residuals(const NewtonianSystem& sys, const ExtendedConnection& gamma,
                                         const CotangentState& c);

struct DeviationCoefficients {
    Vec alpha;      ///< vector field alpha^r
    Vec beta_cov;   ///< covector field beta_r
    Vec eta;        ///< eta_r = beta_r - <p|alpha> (nabla_r H / Omega - Q_r)
    double sigma = 0.0;
    double A = 0.0;    ///< -<p|alpha>
    double Bcoef = 0.0; ///< sigma
};

DeviationCoefficients deviation_coefficients(const NewtonianSystem& sys, const ExtendedConnection& gamma,
                                             const CotangentState& c);

/// Variation of a trajectory: tau = dx/dy and either xi = nabla_tau p
/// (momentum representation) or theta = dv/dy (velocity representation).
struct VariationState {
    Vec tau;
    Vec fiber;
};

struct VariationSeries {
    Representation rep = Representation::Momentum;
    std::vector<double> t;
    std::vector<Vec> tau, fiber;

    std::size_t size() const { return t.size(); }
    VariationState at(std::size_t k) const { return {tau[k], fiber[k]}; }
};

/// Matrix M with d(tau, fiber)/dt = M (tau, fiber) at one base point.
/// Momentum: covariant linearization with curvature terms, turned into plain
/// time derivatives with the connection along the trajectory.
/// Velocity: linearization of the velocity equations solved for d theta/dt
/// through the vertical metric (SingularJacobian when it degenerates).
Mat variation_matrix(const NewtonianSystem& sys, const ExtendedConnection& gamma, const CotangentState& c);
Mat variation_matrix(const NewtonianSystem& sys, const TangentState& q);

/// RK4 on the stored time grid of `base`; the coefficient matrix at the
/// half steps is the average of its values at the neighbouring nodes.
VariationSeries integrate_variation(const NewtonianSystem& sys, const ExtendedConnection& gamma,
                                    const Trajectory& base, const VariationState& init, Representation rep);

/// xi_s = pi_s - sum Gamma^k_sq p_k tau^q with pi = dp/dy.
Vec xi_from_momentum_variation(const ExtendedConnection& gamma, const CotangentState& c, const Vec& tau, const Vec& pi);

struct DeviationOdeCheck {
    std::vector<double> phi, phi_dot, phi_ddot, A, Bcoef;
    /// max_t |phi'' - A phi' - Bcoef phi| / max(1, max_t |phi''|)
    double residual = 0.0;
};

/// phi = <p|tau>, phi' and phi'' from the covariant formulas with alpha and beta.
DeviationOdeCheck deviation_ode_residual(const NewtonianSystem& sys, const ExtendedConnection& gamma,
                                         const Trajectory& base, const VariationSeries& variations);

struct InvarianceReport {
    double weakA_diff = 0.0;
    double weakB_diff = 0.0;
    double addProj_diff = 0.0;
    double addSym_diff = 0.0;
    double addProj_max = 0.0; ///< largest addProj entry under the original connection
    bool additional = false;  ///< additional residuals compared (n >= 3)
};

/// Largest changes of the residuals under gamma -> gamma + T over `points`.
InvarianceReport connection_invariance_check(const NewtonianSystem& sys, const ExtendedConnection& gamma,
                                             const ConnectionShift& T, const std::vector<CotangentState>& points);

/// max over tangent frame vectors X, Y of |b(X, B Y) - b(B X, Y)|.
double b_symmetry_of_B(const Hypersurface& S, const NewtonianSystem& sys, double nu, const ExtendedConnection& gamma,
                       const Vec& y);
double b_symmetry_of_B(const Hypersurface& S, const NewtonianSystem& sys, const NuField& field,
                       const ExtendedConnection& gamma, std::size_t node);

struct PointResiduals {
    CotangentState point;
    WeakResiduals weak;
    bool has_additional = false;
    AdditionalResiduals additional;
};

struct ResidualReport {
    std::vector<PointResiduals> points;
    double max_weakA = 0.0;
    double max_weakB = 0.0;
    double max_addSym = 0.0;
    double max_addProj = 0.0;
};

/// Residuals at every point; the additional ones only when n >= 3.
ResidualReport residual_report(const NewtonianSystem& sys, const ExtendedConnection& gamma,
                               const std::vector<CotangentState>& points);

} // namespace nslab
