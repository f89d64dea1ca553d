#include "nslab/normality.hpp"

#include "nslab/errors.hpp"
#include "nslab/parallel.hpp"

#include <cmath>

namespace nslab {

namespace {

void check_dims(const NewtonianSystem& sys, const ExtendedConnection& gamma) {
    if (gamma.dim() != sys.dim()) throw ValidationError("connection and system dimensions differ");
}

/// GP(r, b) = sum_a p_a Gamma^a_rb, the fiber part of a horizontal derivative.
Mat gamma_p(const Tensor3& G, const Vec& p) {
    const int n = static_cast<int>(p.size());
    Mat GP = Mat::Zero(n, n);
    for (int r = 0; r < n; ++r)
        for (int b = 0; b < n; ++b)
            for (int a = 0; a < n; ++a) GP(r, b) += p[a] * G(a, r, b);
    return GP;
}

struct OmegaPartials {
    Vec dx, dp;
};

OmegaPartials omega_partials(const HamiltonJet& h, const Vec& p) {
    return {h.Hpx.transpose() * p, h.Hp + h.Hpp.transpose() * p};
}

} // namespace

PointGradients point_gradients(const NewtonianSystem& sys, const ExtendedConnection& gamma, const CotangentState& c) {
    check_dims(sys, gamma);
    const int n = sys.dim();
    if (c.x.size() != n || c.p.size() != n) throw ValidationError("point has the wrong dimension");
    if (c.p.norm() == 0.0) throw ZeroMomentum("normality residuals need p != 0");
    PointGradients g;
    g.x = c.x;
    g.p = c.p;
    g.h = sys.hamiltonian().eval(c, 2);
    g.omega = c.p.dot(g.h.Hp);
    if (!(std::abs(g.omega) > 1e-14)) throw DegenerateOmega("Omega vanishes at the evaluation point");
    auto fj = sys.force_at(c);
    g.Q = fj.Q;
    auto G = gamma.eval(c, 0).G;
    Mat GP = gamma_p(G, c.p);
    auto om = omega_partials(g.h, c.p);
    const Vec& Hp = g.h.Hp;

    g.grad_H = g.h.Hx + GP * Hp;
    g.grad_omega = om.dx + GP * om.dp;
    g.vgrad_omega = om.dp;
    g.grad_Q.resize(n, n);
    g.vgrad_Q = fj.dp.transpose();
    g.grad_vgrad_H.resize(n, n);
    for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s) {
            double v = fj.dx(s, r);
            double w = g.h.Hpx(s, r);
            for (int b = 0; b < n; ++b) {
                v += GP(r, b) * fj.dp(s, b) - G(b, r, s) * g.Q[b];
                w += GP(r, b) * g.h.Hpp(s, b) + G(s, r, b) * Hp[b];
            }
            g.grad_Q(r, s) = v;
            g.grad_vgrad_H(r, s) = w;
        }
    g.p_up = g.h.Hpp * c.p;
    g.p_norm2 = c.p.dot(g.p_up);
    g.P = Mat::Identity(n, n) - Hp * c.p.transpose() / g.omega;
    return g;
}

namespace {

DeviationCoefficients coefficients_from(const PointGradients& g) {
    const int n = static_cast<int>(g.p.size());
    const double om = g.omega;
    const Vec& Hp = g.h.Hp;
    Vec W = g.grad_H / om - g.Q;
    double C = g.grad_omega.dot(Hp) / (om * om * om) - g.vgrad_omega.dot(W) / (om * om);
    DeviationCoefficients d;
    d.alpha.resize(n);
    d.beta_cov.resize(n);
    for (int r = 0; r < n; ++r) {
        double a = C * Hp[r];
        double b = C * g.grad_H[r];
        for (int s = 0; s < n; ++s) {
            a -= Hp[s] / om * (g.vgrad_Q(r, s) + g.vgrad_omega[r] / om * g.Q[s]);
            b += (g.grad_Q(s, r) - g.grad_Q(r, s) - g.grad_omega[r] / om * g.Q[s]) * Hp[s] / om;
            b -= W[s] * g.vgrad_Q(s, r);
        }
        d.alpha[r] = a;
        d.beta_cov[r] = b;
    }
    double pa = g.p.dot(d.alpha);
    d.eta = d.beta_cov - pa * W;
    d.sigma = Hp.dot(d.eta) / om;
    d.A = -pa;
    d.Bcoef = d.sigma;
    return d;
}

WeakResiduals weak_from(const PointGradients& g) {
    const int n = static_cast<int>(g.p.size());
    const double om = g.omega;
    const Vec& Hp = g.h.Hp;
    Vec W = g.grad_H / om - g.Q;
    // a_r = sum_s Hp_s / Omega (dQ_s/dp_r + dOmega/dp_r / Omega Q_s)
    Vec a(n);
    for (int r = 0; r < n; ++r) {
        double v = 0.0;
        for (int s = 0; s < n; ++s) v += Hp[s] / om * (g.vgrad_Q(r, s) + g.vgrad_omega[r] / om * g.Q[s]);
        a[r] = v;
    }
    double pa = g.p.dot(a);
    Vec E(n);
    for (int r = 0; r < n; ++r) {
        double v = pa * W[r];
        for (int s = 0; s < n; ++s) {
            v += (g.grad_Q(s, r) + g.grad_omega[s] / om * g.Q[r] - g.grad_Q(r, s) + g.grad_omega[r] / om * g.Q[s]) *
                 Hp[s] / om;
            v -= W[s] * (g.vgrad_Q(s, r) + g.vgrad_omega[s] / om * g.Q[r]);
        }
        E[r] = v;
    }
    WeakResiduals w;
    w.weakA = g.P * a;
    w.weakB = g.P.transpose() * coefficients_from(g).eta;
    w.weakB_printed = g.P.transpose() * E;
    return w;
}

AdditionalResiduals additional_from(const PointGradients& g) {
    const int n = static_cast<int>(g.p.size());
    const double om = g.omega;
    Mat M = g.p_up * g.Q.transpose() / om + g.vgrad_Q;
    AdditionalResiduals a;
    a.opB.B = g.P * M * g.P;
    a.opB.lambda_B = a.opB.B.trace() / (n - 1);
    a.addProj = a.opB.B - a.opB.lambda_B * g.P;

    Mat E(n, n);
    Vec pv = g.p.transpose() * g.vgrad_Q; // pv_s = sum_q p_q dQ_s/dp_q
    Vec pgvH = g.grad_vgrad_H * g.p;      // sum_q p_q nabla_r dH/dp_q
    for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s)
            E(r, s) = g.p_norm2 * g.grad_H[r] * g.Q[s] / (om * om) - pgvH[r] * g.Q[s] / om - g.grad_Q(r, s) +
                      g.grad_H[r] * pv[s] / om + g.grad_H[r] * g.Q[s] / om + g.Q[s] * pv[r];
    Mat K = E - E.transpose();
    a.addSym.resize(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double v = 0.0;
            for (int r = 0; r < n; ++r)
                for (int s = 0; s < n; ++s) v += K(r, s) * g.P(s, i) * g.P(r, j);
            a.addSym(i, j) = v;
        }
    return a;
}

} // namespace

WeakResiduals weak_residuals(const NewtonianSystem& sys, const ExtendedConnection& gamma, const CotangentState& c) {
    return weak_from(point_gradients(sys, gamma, c));
}

AdditionalResiduals additional_residuals(const NewtonianSystem& sys, const ExtendedConnection& gamma,
                                         const CotangentState& c) {
    if (sys.dim() < 3) throw DimensionTooSmall("additional normality equations need n >= 3");
    return additional_from(point_gradients(sys, gamma, c));
}

DeviationCoefficients deviation_coefficients(const NewtonianSystem& sys, const ExtendedConnection& gamma,
                                             const CotangentState& c) {
    return coefficients_from(point_gradients(sys, gamma, c));
}

// ---------------------------------------------------------------------------

Mat variation_matrix(const NewtonianSystem& sys, const ExtendedConnection& gamma, const CotangentState& c) {
    const int n = sys.dim();
    auto g = point_gradients(sys, gamma, c);
    auto jet = gamma.eval(c, 1);
    const Tensor3& G = jet.G;
    auto curv = curvature_tensors(jet, c.p);
    auto fj = sys.force_at(c);
    Mat GP = gamma_p(G, c.p);
    auto om = omega_partials(g.h, c.p);
    const double O = g.omega;
    const Vec& Hp = g.h.Hp;
    const Vec& p = c.p;
    Vec V = Hp / O;
    Vec W = g.grad_H / O - g.Q;

    // partials of V^s = Hp_s / Omega and W_s = nabla_s H / Omega - Q_s
    Mat dVdx = g.h.Hpx / O - Hp * om.dx.transpose() / (O * O);
    Mat dVdp = g.h.Hpp / O - Hp * om.dp.transpose() / (O * O);
    Mat dgHdx(n, n), dgHdp(n, n);
    for (int s = 0; s < n; ++s) {
        for (int r = 0; r < n; ++r) {
            double vx = g.h.Hxx(s, r);
            double vp = g.h.Hpx(r, s);
            for (int b = 0; b < n; ++b) {
                vx += GP(s, b) * g.h.Hpx(b, r);
                vp += G(r, s, b) * Hp[b] + GP(s, b) * g.h.Hpp(b, r);
                for (int a = 0; a < n; ++a) {
                    vx += p[a] * jet.dGdx(a, s, b, r) * Hp[b];
                    vp += p[a] * jet.dGdp(a, s, b, r) * Hp[b];
                }
            }
            dgHdx(s, r) = vx;
            dgHdp(s, r) = vp;
        }
    }
    Mat dWdx = dgHdx / O - g.grad_H * om.dx.transpose() / (O * O) - fj.dx;
    Mat dWdp = dgHdp / O - g.grad_H * om.dp.transpose() / (O * O) - fj.dp;

    // covariant derivatives, first index the derivative direction
    Mat vgradV = dVdp.transpose(), vgradW = dWdp.transpose();
    Mat gradV(n, n), gradW(n, n);
    for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s) {
            double v = dVdx(s, r), w = dWdx(s, r);
            for (int b = 0; b < n; ++b) {
                v += GP(r, b) * dVdp(s, b) + G(s, r, b) * V[b];
                w += GP(r, b) * dWdp(s, b) - G(b, r, s) * W[b];
            }
            gradV(r, s) = v;
            gradW(r, s) = w;
        }

    Mat M = Mat::Zero(2 * n, 2 * n);
    for (int s = 0; s < n; ++s)
        for (int r = 0; r < n; ++r) {
            double tt = gradV(r, s), tx = vgradV(r, s);
            double xt = -gradW(r, s), xx = -vgradW(r, s);
            for (int a = 0; a < n; ++a) {
                tt -= G(s, a, r) * V[a];
                xx += G(r, a, s) * V[a];
            }
            for (int q = 0; q < n; ++q)
                for (int m = 0; m < n; ++m) {
                    xt -= curv.D(m, q, r, s) * p[m] * W[q] + V[q] * p[m] * curv.R(m, s, q, r);
                    xx -= V[q] * p[m] * curv.D(m, r, q, s);
                }
            M(s, r) = tt;
            M(s, n + r) = tx;
            M(n + s, r) = xt;
            M(n + s, n + r) = xx;
        }
    return M;
}

Mat variation_matrix(const NewtonianSystem& sys, const TangentState& q) {
    const LagrangianModel* L = sys.lagrangian();
    if (!L) throw ValidationError("velocity-representation variations need a Lagrangian");
    const int n = sys.dim();
    auto lj = L->jet(q, 3);
    const Vec& v = q.v;
    double O = v.dot(lj.Lv);
    if (!(std::abs(O) > 1e-14)) throw DegenerateOmega("Omega vanishes in the velocity variation");
    Eigen::PartialPivLU<Mat> lu(lj.Lvv);
    if (!(std::abs(lu.determinant()) >= 1e-14)) throw SingularJacobian("vertical metric is singular in the velocity variation");
    auto pv = rhs_v(sys, q);
    const Vec& xdot = pv.dx;
    const Vec& vdot = pv.dfiber;
    auto fj = sys.force().eval(q, *L);

    Vec dOdv = lj.Lv + lj.Lvv * v;        // Lvv symmetric
    Vec dOdx = lj.Lvx.transpose() * v;    // sum_k v^k d2L/dv^k dx^s
    Mat Att = -v * dOdx.transpose() / (O * O);
    Mat Atq = Mat::Identity(n, n) / O - v * dOdv.transpose() / (O * O);

    // rhs of the linearized second equation, before the tau-dot term
    Mat Rt = lj.Lxx / O - lj.Lx * dOdx.transpose() / (O * O) + fj.dx;
    Mat Rq = lj.Lvx.transpose() / O - lj.Lx * dOdv.transpose() / (O * O) + fj.dv;
    for (int i = 0; i < n; ++i)
        for (int s = 0; s < n; ++s)
            for (int k = 0; k < n; ++k) {
                Rq(i, s) -= lj.Lvvv(i, s, k) * vdot[k] + lj.Lvvx(i, s, k) * xdot[k];
                Rt(i, s) -= lj.Lvvx(i, k, s) * vdot[k] + lj.Lvxx(i, s, k) * xdot[k];
            }
    Rt -= lj.Lvx * Att;
    Rq -= lj.Lvx * Atq;

    Mat M(2 * n, 2 * n);
    M.topLeftCorner(n, n) = Att;
    M.topRightCorner(n, n) = Atq;
    M.bottomLeftCorner(n, n) = lu.solve(Rt);
    M.bottomRightCorner(n, n) = lu.solve(Rq);
    return M;
}

VariationSeries integrate_variation(const NewtonianSystem& sys, const ExtendedConnection& gamma,
                                    const Trajectory& base, const VariationState& init, Representation rep) {
    check_dims(sys, gamma);
    const int n = sys.dim();
    const std::size_t steps = base.size();
    if (steps < 2) throw InsufficientSamples("variation needs a base trajectory with at least two samples");
    if (init.tau.size() != n || init.fiber.size() != n) throw ValidationError("variation state has the wrong dimension");
    if (!init.tau.allFinite() || !init.fiber.allFinite()) throw ValidationError("variation state must be finite");
    const LagrangianModel* L = sys.lagrangian();
    if ((rep == Representation::Velocity || base.rep == Representation::Velocity) && !L)
        throw ValidationError("velocity representation needs a Lagrangian");

    std::vector<Mat> M(steps);
    parallel_for(steps, [&](std::size_t k) {
        try {
            if (rep == Representation::Momentum) {
                CotangentState c = base.rep == Representation::Momentum ? base.cotangent(k) : legendre(*L, base.tangent(k));
                M[k] = variation_matrix(sys, gamma, c);
            } else {
                TangentState q = base.rep == Representation::Velocity ? base.tangent(k)
                                                                      : inverse_legendre(*L, base.cotangent(k)).q;
                M[k] = variation_matrix(sys, q);
            }
        } catch (const NumericError&) {
            rethrow_at_time(base.t[k]);
        }
    });

    VariationSeries out;
    out.rep = rep;
    out.t = base.t;
    out.tau.reserve(steps);
    out.fiber.reserve(steps);
    Vec z(2 * n);
    z << init.tau, init.fiber;
    out.tau.push_back(init.tau);
    out.fiber.push_back(init.fiber);
    for (std::size_t k = 0; k + 1 < steps; ++k) {
        double h = base.t[k + 1] - base.t[k];
        Mat mid = 0.5 * (M[k] + M[k + 1]);
        Vec k1 = M[k] * z;
        Vec k2 = mid * (z + 0.5 * h * k1);
        Vec k3 = mid * (z + 0.5 * h * k2);
        Vec k4 = M[k + 1] * (z + h * k3);
        z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out.tau.push_back(z.head(n));
        out.fiber.push_back(z.tail(n));
    }
    return out;
}

Vec xi_from_momentum_variation(const ExtendedConnection& gamma, const CotangentState& c, const Vec& tau, const Vec& pi) {
    const int n = gamma.dim();
    auto G = gamma.eval(c, 0).G;
    Vec xi = pi;
    for (int s = 0; s < n; ++s)
        for (int k = 0; k < n; ++k)
            for (int q = 0; q < n; ++q) xi[s] -= G(k, s, q) * c.p[k] * tau[q];
    return xi;
}

DeviationOdeCheck deviation_ode_residual(const NewtonianSystem& sys, const ExtendedConnection& gamma,
                                         const Trajectory& base, const VariationSeries& variations) {
    check_dims(sys, gamma);
    const std::size_t steps = base.size();
    if (variations.size() != steps) throw ValidationError("variation series is not aligned with the base trajectory");
    const LagrangianModel* L = sys.lagrangian();
    if ((variations.rep == Representation::Velocity || base.rep == Representation::Velocity) && !L)
        throw ValidationError("velocity representation needs a Lagrangian");

    DeviationOdeCheck out;
    out.phi.resize(steps);
    out.phi_dot.resize(steps);
    out.phi_ddot.resize(steps);
    out.A.resize(steps);
    out.Bcoef.resize(steps);
    parallel_for(steps, [&](std::size_t k) {
        CotangentState c = base.rep == Representation::Momentum ? base.cotangent(k) : legendre(*L, base.tangent(k));
        const Vec& tau = variations.tau[k];
        Vec xi;
        if (variations.rep == Representation::Momentum) {
            xi = variations.fiber[k];
        } else {
            TangentState q = base.rep == Representation::Velocity ? base.tangent(k) : inverse_legendre(*L, c).q;
            auto lj = L->jet(q, 2);
            xi = xi_from_momentum_variation(gamma, c, tau, lj.Lvv * variations.fiber[k] + lj.Lvx * tau);
        }
        auto g = point_gradients(sys, gamma, c);
        auto d = coefficients_from(g);
        Vec W = g.grad_H / g.omega - g.Q;
        out.phi[k] = c.p.dot(tau);
        out.phi_dot[k] = -g.h.Hp.dot(xi) / g.omega - W.dot(tau);
        out.phi_ddot[k] = d.alpha.dot(xi) + d.beta_cov.dot(tau);
        out.A[k] = d.A;
        out.Bcoef[k] = d.Bcoef;
    });
    double worst = 0.0, scale = 1.0;
    for (std::size_t k = 0; k < steps; ++k) {
        worst = std::max(worst, std::abs(out.phi_ddot[k] - out.A[k] * out.phi_dot[k] - out.Bcoef[k] * out.phi[k]));
        scale = std::max(scale, std::abs(out.phi_ddot[k]));
    }
    out.residual = worst / scale;
    return out;
}

// ---------------------------------------------------------------------------

InvarianceReport connection_invariance_check(const NewtonianSystem& sys, const ExtendedConnection& gamma,
                                             const ConnectionShift& T, const std::vector<CotangentState>& points) {
    check_dims(sys, gamma);
    ExtendedConnection moved = shifted(gamma, T);
    InvarianceReport rep;
    rep.additional = sys.dim() >= 3;
    for (const auto& c : points) {
        auto g0 = point_gradients(sys, gamma, c);
        auto g1 = point_gradients(sys, moved, c);
        auto w0 = weak_from(g0), w1 = weak_from(g1);
        rep.weakA_diff = std::max(rep.weakA_diff, max_abs(w0.weakA - w1.weakA));
        rep.weakB_diff = std::max(rep.weakB_diff, max_abs(w0.weakB - w1.weakB));
        if (rep.additional) {
            auto a0 = additional_from(g0), a1 = additional_from(g1);
            rep.addProj_diff = std::max(rep.addProj_diff, max_abs(a0.addProj - a1.addProj));
            rep.addSym_diff = std::max(rep.addSym_diff, max_abs(a0.addSym - a1.addSym));
            rep.addProj_max = std::max(rep.addProj_max, max_abs(a0.addProj));
        }
    }
    return rep;
}

double b_symmetry_of_B(const Hypersurface& S, const NewtonianSystem& sys, double nu, const ExtendedConnection& gamma,
                       const Vec& y) {
    if (S.dim() < 3) throw DimensionTooSmall("operator B needs n >= 3");
    auto sff = second_fundamental_form(S, sys, nu, gamma, y);
    CotangentState c{S.point(y), nu * normal_covector(S, y)};
    Mat B = additional_residuals(sys, gamma, c).opB.B;
    Mat T = tangent_frame(S, y);
    double worst = 0.0;
    for (int i = 0; i < T.cols(); ++i)
        for (int j = 0; j < T.cols(); ++j) {
            Vec X = T.col(i), Y = T.col(j);
            double lhs = X.dot(sff.b * (B * Y));
            double rhs = (B * X).dot(sff.b * Y);
            worst = std::max(worst, std::abs(lhs - rhs));
        }
    return worst;
}

double b_symmetry_of_B(const Hypersurface& S, const NewtonianSystem& sys, const NuField& field,
                       const ExtendedConnection& gamma, std::size_t node) {
    if (node >= field.nu.size()) throw ValidationError("grid node out of range");
    return b_symmetry_of_B(S, sys, field.nu[node], gamma, field.grid.node(node));
}

ResidualReport residual_report(const NewtonianSystem& sys, const ExtendedConnection& gamma,
                               const std::vector<CotangentState>& points) {
    check_dims(sys, gamma);
    ResidualReport rep;
    rep.points.resize(points.size());
    const bool additional = sys.dim() >= 3;
    parallel_for(points.size(), [&](std::size_t i) {
        try {
            auto g = point_gradients(sys, gamma, points[i]);
            auto& pr = rep.points[i];
            pr.point = points[i];
            pr.weak = weak_from(g);
            pr.has_additional = additional;
            if (additional) pr.additional = additional_from(g);
        } catch (const NumericError&) {
            rethrow_with_suffix(" (point " + std::to_string(i) + ")");
        }
    });
    for (const auto& pr : rep.points) {
        rep.max_weakA = std::max(rep.max_weakA, max_abs(pr.weak.weakA));
        rep.max_weakB = std::max(rep.max_weakB, max_abs(pr.weak.weakB));
        if (pr.has_additional) {
            rep.max_addSym = std::max(rep.max_addSym, max_abs(pr.additional.addSym));
            rep.max_addProj = std::max(rep.max_addProj, max_abs(pr.additional.addProj));
        }
    }
    return rep;
}

} // namespace nslab
