#include "nslab/calculus.hpp"

#include "nslab/errors.hpp"
#include "nslab/random.hpp"

#include <cmath>
#include <limits>

namespace nslab {

namespace {

constexpr double kNewtonTol = 1e-12;
constexpr int kNewtonMaxIter = 50;
constexpr double kSingularCutoff = 1e-14;

Assignment tangent_assignment(const TangentState& q) {
    return {{q.x.data(), static_cast<std::size_t>(q.x.size())},
            {q.v.data(), static_cast<std::size_t>(q.v.size())},
            {},
            {}};
}

Assignment cotangent_assignment(const CotangentState& c) {
    return {{c.x.data(), static_cast<std::size_t>(c.x.size())},
            {},
            {c.p.data(), static_cast<std::size_t>(c.p.size())},
            {}};
}

void check_dim(int n, const Vec& a, const Vec& b) {
    if (a.size() != n || b.size() != n)
        throw ValidationError("state has dimension " + std::to_string(a.size()) + "/" + std::to_string(b.size()) +
                              ", model expects " + std::to_string(n));
}

Mat unpack_matrix(const std::vector<double>& buf, std::size_t offset, int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = buf[offset + static_cast<std::size_t>(i * n + j)];
    return m;
}

} // namespace

// ─── LagrangianModel ─────────────────────────────────────────────────────

LagrangianModel::LagrangianModel(int n, Expr lagrangian) : n_(n), L_(std::move(lagrangian)) {
    if (n < 1) throw ValidationError("dimension must be positive");
    if (L_.depends_on(SymbolKind::Momentum) || L_.depends_on(SymbolKind::Param))
        throw ValidationError("a Lagrangian may only use x and v symbols");

    for (int i = 0; i < n; ++i) {
        Lx_.push_back(L_.derivative(base_sym(i)));
        Lv_.push_back(L_.derivative(vel_sym(i)));
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Lvv_.push_back(Lv_[i].derivative(vel_sym(j)));
            Lvx_.push_back(Lv_[i].derivative(base_sym(j)));
            Lxx_.push_back(Lx_[i].derivative(base_sym(j)));
        }

    std::vector<Expr> first{L_};
    first.insert(first.end(), Lx_.begin(), Lx_.end());
    first.insert(first.end(), Lv_.begin(), Lv_.end());
    order1_ = CompiledBatch(first);

    std::vector<Expr> second(Lvv_);
    second.insert(second.end(), Lvx_.begin(), Lvx_.end());
    second.insert(second.end(), Lxx_.begin(), Lxx_.end());
    order2_ = CompiledBatch(second);

    std::vector<Expr> vvv, vvx, vxx;
    quadratic_ = true;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                vvv.push_back(Lvv_[idx(i, j)].derivative(vel_sym(k)));
                vvx.push_back(Lvv_[idx(i, j)].derivative(base_sym(k)));
                vxx.push_back(Lvx_[idx(i, j)].derivative(base_sym(k)));
                if (!vvv.back().is_zero()) quadratic_ = false;
            }
    std::vector<Expr> third(vvv);
    third.insert(third.end(), vvx.begin(), vvx.end());
    third.insert(third.end(), vxx.begin(), vxx.end());
    order3_ = CompiledBatch(third);
}

LagrangianModel LagrangianModel::parse(int n, std::string_view text) {
    return LagrangianModel(n, parse_expression(text, SymbolScope::over_velocity(n)));
}

double LagrangianModel::value(const TangentState& q) const {
    check_dim(n_, q.x, q.v);
    return L_.eval(tangent_assignment(q));
}

LagrangeJet LagrangianModel::jet(const TangentState& q, int order) const {
    check_dim(n_, q.x, q.v);
    const auto as = tangent_assignment(q);
    const auto n = static_cast<std::size_t>(n_);
    LagrangeJet j;
    auto b1 = order1_.eval(as);
    j.L = b1[0];
    j.Lx = Eigen::Map<const Vec>(b1.data() + 1, n_);
    j.Lv = Eigen::Map<const Vec>(b1.data() + 1 + n, n_);
    if (order >= 2) {
        auto b2 = order2_.eval(as);
        j.Lvv = unpack_matrix(b2, 0, n_);
        j.Lvx = unpack_matrix(b2, n * n, n_);
        j.Lxx = unpack_matrix(b2, 2 * n * n, n_);
    }
    if (order >= 3) {
        auto b3 = order3_.eval(as);
        const std::size_t block = n * n * n;
        j.Lvvv = Tensor3(n_);
        j.Lvvx = Tensor3(n_);
        j.Lvxx = Tensor3(n_);
        std::copy(b3.begin(), b3.begin() + static_cast<long>(block), j.Lvvv.data().begin());
        std::copy(b3.begin() + static_cast<long>(block), b3.begin() + static_cast<long>(2 * block),
                  j.Lvvx.data().begin());
        std::copy(b3.begin() + static_cast<long>(2 * block), b3.end(), j.Lvxx.data().begin());
    }
    return j;
}

// ─── Legendre maps and metrics ───────────────────────────────────────────

double omega_v(const LagrangianModel& L, const TangentState& q) { return q.v.dot(L.jet(q, 1).Lv); }

CotangentState legendre(const LagrangianModel& L, const TangentState& q) { return {q.x, L.jet(q, 1).Lv}; }

namespace {

/// Scale s > 0 with <p, Lv(x, s p)> = |p|^2, by Newton in log s. Returns 1
/// when the ray model does not apply.
double radial_scale(const LagrangianModel& L, const Vec& x, const Vec& p) {
    const double target = p.squaredNorm();
    if (target == 0.0) return 1.0;
    double u = 0.0;
    for (int it = 0; it < 12; ++it) {
        TangentState q{x, std::exp(u) * p};
        LagrangeJet j = L.jet(q, 2);
        double f = p.dot(j.Lv);
        double df = std::exp(u) * p.dot(j.Lvv * p);
        if (!(f > 0.0) || !(df > 0.0) || !std::isfinite(f) || !std::isfinite(df)) return 1.0;
        double step = (std::log(f) - std::log(target)) * f / df;
        step = std::clamp(step, -5.0, 5.0);
        u -= step;
        if (std::abs(step) < 1e-4) break;
    }
    return std::isfinite(u) ? std::exp(u) : 1.0;
}

} // namespace

InverseLegendreResult inverse_legendre(const LagrangianModel& L, const CotangentState& c,
                                       const std::optional<Vec>& guess) {
    const int n = L.dim();
    check_dim(n, c.x, c.p);

    Vec v;
    if (guess) {
        v = *guess;
    } else if (L.quadratic_in_velocity()) {
        LagrangeJet j = L.jet({c.x, c.p}, 2);
        Eigen::PartialPivLU<Mat> lu(j.Lvv);
        if (std::abs(j.Lvv.determinant()) < kSingularCutoff)
            throw SingularJacobian("det g below 1e-14 in inverse Legendre");
        v = lu.solve(c.p);
    } else {
        v = radial_scale(L, c.x, c.p) * c.p;
    }

    auto residual_of = [&](const Vec& vv, Vec* F) {
        Vec r = L.jet({c.x, vv}, 1).Lv - c.p;
        if (F) *F = r;
        double m = max_abs(r);
        return std::isfinite(m) ? m : std::numeric_limits<double>::infinity();
    };

    Vec F;
    double res = residual_of(v, &F);
    const double stall_tol = kNewtonTol * std::max(1.0, max_abs(c.p));
    for (int it = 0; it <= kNewtonMaxIter; ++it) {
        if (res <= kNewtonTol) return {{c.x, v}, it, res};
        if (it == kNewtonMaxIter) break;

        Mat g = L.jet({c.x, v}, 2).Lvv;
        double det = g.determinant();
        if (!(std::abs(det) >= kSingularCutoff))
            throw SingularJacobian("det g = " + std::to_string(det) + " below 1e-14 in inverse Legendre");
        Vec step = -g.partialPivLu().solve(F);

        double alpha = 1.0;
        Vec trial = v + step;
        Vec Ft;
        double rt = residual_of(trial, &Ft);
        while (rt > res && alpha > 1e-12) {
            alpha *= 0.5;
            trial = v + alpha * step;
            rt = residual_of(trial, &Ft);
        }
        if (rt > res) {
            // No descent possible: we are at rounding level of the residual.
            if (res <= stall_tol) return {{c.x, v}, it, res};
            throw NonConvergence("inverse Legendre stalled at residual " + std::to_string(res));
        }
        if (rt == res && res <= stall_tol) return {{c.x, trial}, it + 1, rt};
        v = trial;
        F = Ft;
        res = rt;
    }
    throw NonConvergence("inverse Legendre exceeded 50 iterations (residual " + std::to_string(res) + ")");
}

VerticalMetric vertical_metrics(const LagrangianModel& L, const TangentState& q) {
    Mat g = L.jet(q, 2).Lvv;
    g = 0.5 * (g + g.transpose());
    double det = g.determinant();
    if (!(std::abs(det) >= kSingularCutoff)) throw SingularJacobian("det g = " + std::to_string(det));
    return {g, g.inverse()};
}

Vec mu_map(const LagrangianModel& L, const TangentState& q) {
    double om = omega_v(L, q);
    if (om == 0.0) throw DegenerateOmega("mu map needs Omega != 0");
    return q.v / om;
}

// ─── HamiltonianModel ────────────────────────────────────────────────────

HamiltonianModel HamiltonianModel::from_lagrangian(std::shared_ptr<const LagrangianModel> L) {
    if (!L) throw ValidationError("missing Lagrangian");
    HamiltonianModel h;
    h.n_ = L->dim();
    h.source_ = Source::DerivedFromLagrangian;
    h.L_ = std::move(L);
    return h;
}

HamiltonianModel HamiltonianModel::from_expression(int n, Expr H, std::shared_ptr<const LagrangianModel> backing) {
    if (H.depends_on(SymbolKind::Velocity) || H.depends_on(SymbolKind::Param))
        throw ValidationError("a Hamiltonian may only use x and p symbols");
    if (backing && backing->dim() != n) throw ValidationError("backing Lagrangian has a different dimension");
    HamiltonianModel h;
    h.n_ = n;
    h.source_ = Source::Expression;
    h.L_ = std::move(backing);

    std::vector<Expr> first;
    for (int i = 0; i < n; ++i) first.push_back(H.derivative(base_sym(i)));
    for (int i = 0; i < n; ++i) first.push_back(H.derivative(mom_sym(i)));
    std::vector<Expr> second;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) second.push_back(first[static_cast<std::size_t>(n + i)].derivative(mom_sym(j)));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) second.push_back(first[static_cast<std::size_t>(n + i)].derivative(base_sym(j)));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) second.push_back(first[static_cast<std::size_t>(i)].derivative(base_sym(j)));

    std::vector<Expr> zero{H};
    h.order0_ = CompiledBatch(zero);
    h.order1_ = CompiledBatch(first);
    h.order2_ = CompiledBatch(second);
    h.partials1_ = std::move(first);
    h.partials2_ = std::move(second);
    h.H_ = std::move(H);
    return h;
}

HamiltonJet HamiltonianModel::eval(const CotangentState& c, int order) const {
    check_dim(n_, c.x, c.p);
    HamiltonJet j;
    if (source_ == Source::Expression) {
        const auto as = cotangent_assignment(c);
        j.H = order0_.eval(as)[0];
        if (order >= 1) {
            auto b = order1_.eval(as);
            j.Hx = Eigen::Map<const Vec>(b.data(), n_);
            j.Hp = Eigen::Map<const Vec>(b.data() + n_, n_);
        }
        if (order >= 2) {
            auto b = order2_.eval(as);
            const auto nn = static_cast<std::size_t>(n_ * n_);
            j.Hpp = unpack_matrix(b, 0, n_);
            j.Hpx = unpack_matrix(b, nn, n_);
            j.Hxx = unpack_matrix(b, 2 * nn, n_);
        }
        return j;
    }

    // Derived from L: H = v.p - L at v = lambda^{-1}(p); dH/dp = v,
    // dH/dx = -dL/dx, and the second partials follow from differentiating
    // dL/dv(x, v(x, p)) = p.
    TangentState q = inverse_legendre(*L_, c).q;
    LagrangeJet lj = L_->jet(q, order >= 2 ? 2 : 1);
    j.H = q.v.dot(c.p) - lj.L;
    if (order >= 1) {
        j.Hp = q.v;
        j.Hx = -lj.Lx;
    }
    if (order >= 2) {
        Mat g = 0.5 * (lj.Lvv + lj.Lvv.transpose());
        if (!(std::abs(g.determinant()) >= kSingularCutoff)) throw SingularJacobian("det g below 1e-14");
        Mat ginv = g.inverse();
        j.Hpp = ginv;
        j.Hpx = -ginv * lj.Lvx;
        j.Hxx = -lj.Lxx + lj.Lvx.transpose() * ginv * lj.Lvx;
    }
    return j;
}

double omega_p(const HamiltonianModel& H, const CotangentState& c) { return c.p.dot(H.eval(c, 1).Hp); }

// ─── regularity ──────────────────────────────────────────────────────────

RegularityReport check_regularity(const LagrangianModel& L, const RegularitySample& s) {
    const int n = L.dim();
    if (s.x_lo.size() != n || s.x_hi.size() != n || s.v_lo.size() != n || s.v_hi.size() != n)
        throw ValidationError("regularity sample boxes must have dimension " + std::to_string(n));
    if (s.count < 1) throw ValidationError("regularity sample count must be positive");

    Rng rng(s.seed);
    RegularityReport r;
    r.min_omega = std::numeric_limits<double>::infinity();
    r.min_abs_det_g = std::numeric_limits<double>::infinity();
    for (int k = 0; k < s.count; ++k) {
        Vec x = rng.in_box(s.x_lo, s.x_hi);
        Vec v;
        int guard = 0;
        do {
            v = rng.in_box(s.v_lo, s.v_hi);
        } while (v.norm() < s.v_min_norm && ++guard < 1000);
        TangentState q{x, v};
        LagrangeJet j = L.jet(q, 2);
        r.min_omega = std::min(r.min_omega, v.dot(j.Lv));
        double det = std::abs(j.Lvv.determinant());
        r.min_abs_det_g = std::min(r.min_abs_det_g, det);
        double err = std::numeric_limits<double>::infinity();
        if (det >= kSingularCutoff) {
            try {
                Vec back = inverse_legendre(L, {x, j.Lv}).q.v;
                err = max_abs(back - v);
            } catch (const NumericError&) {
            }
        }
        r.max_roundtrip_error = std::max(r.max_roundtrip_error, err);
        ++r.samples;
    }
    r.omega_positive = r.min_omega > 0.0;
    r.metric_nondegenerate = r.min_abs_det_g > 1e-10;
    r.roundtrip_ok = r.max_roundtrip_error <= 1e-8;
    r.pass = r.omega_positive && r.metric_nondegenerate && r.roundtrip_ok;
    return r;
}

} // namespace nslab
