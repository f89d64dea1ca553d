#include "nslab/dynamics.hpp"

#include "nslab/errors.hpp"
#include "nslab/report.hpp"

#include <cmath>
#include <ostream>

namespace nslab {

namespace {

Assignment point(bool velocity, const Vec& x, const Vec& fiber) {
    std::span<const double> xs{x.data(), static_cast<std::size_t>(x.size())};
    std::span<const double> fs{fiber.data(), static_cast<std::size_t>(fiber.size())};
    return velocity ? Assignment{xs, fs, {}, {}} : Assignment{xs, {}, fs, {}};
}

double checked_omega(double omega, const char* where) {
    if (!(std::abs(omega) > 1e-14) || !std::isfinite(omega))
        throw DegenerateOmega(std::string("Omega vanishes in ") + where);
    return omega;
}

} // namespace

ForceField::ForceField(int n, std::vector<Expr> q) : n_(n), q_(std::move(q)) {
    if (q_.size() != static_cast<std::size_t>(n)) throw ValidationError("force field needs one component per dimension");
    for (const Expr& e : q_) {
        if (e.depends_on(SymbolKind::Velocity) || e.depends_on(SymbolKind::Param))
            throw ValidationError("force components may only use x and p symbols");
        zero_ = zero_ && e.is_zero();
    }
    std::vector<Expr> all = q_;
    for (const Expr& e : q_)
        for (int r = 0; r < n; ++r) all.push_back(e.derivative(base_sym(r)));
    for (const Expr& e : q_)
        for (int r = 0; r < n; ++r) all.push_back(e.derivative(mom_sym(r)));
    batch_ = CompiledBatch(all);
}

ForceField ForceField::zero(int n) { return ForceField(n, std::vector<Expr>(static_cast<std::size_t>(n))); }

ForceField ForceField::parse(int n, const std::vector<std::string>& texts) {
    auto scope = SymbolScope::over_momentum(n);
    std::vector<Expr> q;
    for (const auto& t : texts) q.push_back(parse_expression(t, scope));
    return ForceField(n, std::move(q));
}

ForceField ForceField::from_acceleration(std::shared_ptr<const LagrangianModel> L, std::vector<Expr> accel) {
    if (!L) throw ValidationError("acceleration form needs a Lagrangian");
    const int n = L->dim();
    if (accel.size() != static_cast<std::size_t>(n)) throw ValidationError("acceleration needs one component per dimension");
    for (const Expr& e : accel)
        if (e.depends_on(SymbolKind::Momentum) || e.depends_on(SymbolKind::Param))
            throw ValidationError("acceleration components may only use x and v symbols");
    Expr omega = Expr(0.0);
    for (int k = 0; k < n; ++k) omega = omega + Expr::symbol(vel_sym(k)) * L->dv(k);
    ForceField f;
    f.n_ = n;
    f.velocity_ = true;
    f.L_ = L;
    for (int i = 0; i < n; ++i) {
        Expr q = -L->dx(i) / omega;
        for (int j = 0; j < n; ++j)
            q = q + L->dvdv(i, j) * accel[static_cast<std::size_t>(j)] +
                L->dvdx(i, j) * Expr::symbol(vel_sym(j)) / omega;
        f.zero_ = f.zero_ && q.is_zero();
        f.q_.push_back(q);
    }
    std::vector<Expr> all = f.q_;
    for (const Expr& e : f.q_)
        for (int r = 0; r < n; ++r) all.push_back(e.derivative(base_sym(r)));
    for (const Expr& e : f.q_)
        for (int r = 0; r < n; ++r) all.push_back(e.derivative(vel_sym(r)));
    f.batch_ = CompiledBatch(all);
    return f;
}

namespace {

void unpack(const std::vector<double>& all, int n, Vec& Q, Mat& dx, Mat& dfib) {
    Q.resize(n);
    dx.resize(n, n);
    dfib.resize(n, n);
    std::size_t k = 0;
    for (int i = 0; i < n; ++i) Q[i] = all[k++];
    for (int i = 0; i < n; ++i)
        for (int r = 0; r < n; ++r) dx(i, r) = all[k++];
    for (int i = 0; i < n; ++i)
        for (int r = 0; r < n; ++r) dfib(i, r) = all[k++];
}

} // namespace

ForceJet ForceField::eval(const CotangentState& c, const LagrangianModel* L) const {
    ForceJet j;
    if (zero_) {
        j.Q = Vec::Zero(n_);
        j.dx = Mat::Zero(n_, n_);
        j.dp = Mat::Zero(n_, n_);
        return j;
    }
    std::vector<double> all(batch_.size());
    if (!velocity_) {
        batch_.eval(point(false, c.x, c.p), all);
        unpack(all, n_, j.Q, j.dx, j.dp);
        return j;
    }
    // Authored over (x, v): compose with the inverse Legendre map.
    const LagrangianModel& lag = L ? *L : *L_;
    auto inv = inverse_legendre(lag, c);
    auto lj = lag.jet(inv.q, 2);
    Mat ginv = lj.Lvv.inverse();
    Mat dv;
    batch_.eval(point(true, inv.q.x, inv.q.v), all);
    unpack(all, n_, j.Q, j.dx, dv);
    j.dp = dv * ginv;
    j.dx = j.dx - dv * ginv * lj.Lvx;
    return j;
}

ForceJetV ForceField::eval(const TangentState& q, const LagrangianModel& L) const {
    ForceJetV j;
    if (zero_) {
        j.Q = Vec::Zero(n_);
        j.dx = Mat::Zero(n_, n_);
        j.dv = Mat::Zero(n_, n_);
        return j;
    }
    std::vector<double> all(batch_.size());
    if (velocity_) {
        batch_.eval(point(true, q.x, q.v), all);
        unpack(all, n_, j.Q, j.dx, j.dv);
        return j;
    }
    auto lj = L.jet(q, 2);
    Vec p = lj.Lv;
    Mat dp;
    batch_.eval(point(false, q.x, p), all);
    unpack(all, n_, j.Q, j.dx, dp);
    j.dv = dp * lj.Lvv;
    j.dx = j.dx + dp * lj.Lvx;
    return j;
}

NewtonianSystem::NewtonianSystem(HamiltonianModel H, ForceField Q) : H_(std::move(H)), Q_(std::move(Q)) {
    if (H_.dim() != Q_.dim()) throw ValidationError("Hamiltonian and force field dimensions differ");
    if (Q_.velocity_authored() && !H_.lagrangian())
        throw ValidationError("a velocity-authored force needs a Hamiltonian backed by a Lagrangian");
}

PhaseVelocity rhs_p(const NewtonianSystem& sys, const CotangentState& c) {
    auto h = sys.hamiltonian().eval(c, 1);
    double omega = checked_omega(c.p.dot(h.Hp), "the momentum equations");
    auto q = sys.force_at(c);
    return {h.Hp / omega, -h.Hx / omega + q.Q};
}

PhaseVelocity rhs_v(const NewtonianSystem& sys, const TangentState& q) {
    const LagrangianModel* L = sys.lagrangian();
    if (!L) throw ValidationError("velocity-representation dynamics need a Lagrangian");
    auto lj = L->jet(q, 2);
    double omega = checked_omega(q.v.dot(lj.Lv), "the velocity equations");
    Vec dx = q.v / omega;
    Eigen::PartialPivLU<Mat> lu(lj.Lvv);
    if (!(std::abs(lu.determinant()) >= 1e-14)) throw SingularJacobian("vertical metric is singular in the velocity equations");
    Vec Q = sys.force().eval(q, *L).Q;
    Vec rhs = lj.Lx / omega + Q - lj.Lvx * dx;
    return {dx, lu.solve(rhs)};
}

std::pair<int, double> step_grid(double t_end, double h) {
    if (!(h > 0.0) || !std::isfinite(h)) throw ValidationError("step size must be positive");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ValidationError("end time must be positive");
    long steps = std::lround(t_end / h);
    if (steps < 1) steps = 1;
    if (steps > 100000000L) throw ValidationError("too many integration steps");
    return {static_cast<int>(steps), t_end / static_cast<double>(steps)};
}

void rethrow_at_time(double t) { rethrow_with_suffix(" (at t=" + format_double(t) + ")"); }

namespace {

template <typename Rhs>
Trajectory run(Representation rep, const Vec& x0, const Vec& f0, double t_end, double h, Rhs&& rhs) {
    auto [steps, dt] = step_grid(t_end, h);
    const int n = static_cast<int>(x0.size());
    Trajectory tr;
    tr.rep = rep;
    tr.h = dt;
    tr.t.reserve(static_cast<std::size_t>(steps) + 1);
    tr.x.reserve(static_cast<std::size_t>(steps) + 1);
    tr.fiber.reserve(static_cast<std::size_t>(steps) + 1);
    Vec y(2 * n);
    y << x0, f0;
    auto f = [&](double, const Vec& s) {
        PhaseVelocity pv = rhs(s.head(n), s.tail(n));
        Vec d(2 * n);
        d << pv.dx, pv.dfiber;
        return d;
    };
    tr.t.push_back(0.0);
    tr.x.push_back(x0);
    tr.fiber.push_back(f0);
    for (int k = 0; k < steps; ++k) {
        double t = k * dt;
        try {
            y = rk4_step(f, t, y, dt);
        } catch (const NumericError&) {
            rethrow_at_time(t);
        }
        if (!y.allFinite()) throw NumericError("trajectory left the finite range (at t=" + format_double(t + dt) + ")");
        tr.t.push_back((k + 1) * dt);
        tr.x.push_back(y.head(n));
        tr.fiber.push_back(y.tail(n));
    }
    return tr;
}

} // namespace

Trajectory integrate(const NewtonianSystem& sys, const CotangentState& init, double t_end, double h) {
    if (init.x.size() != sys.dim() || init.p.size() != sys.dim()) throw ValidationError("initial state has the wrong dimension");
    return run(Representation::Momentum, init.x, init.p, t_end, h,
               [&](const Vec& x, const Vec& p) { return rhs_p(sys, {x, p}); });
}

Trajectory integrate(const NewtonianSystem& sys, const TangentState& init, double t_end, double h) {
    if (init.x.size() != sys.dim() || init.v.size() != sys.dim()) throw ValidationError("initial state has the wrong dimension");
    return run(Representation::Velocity, init.x, init.v, t_end, h,
               [&](const Vec& x, const Vec& v) { return rhs_v(sys, {x, v}); });
}

void Trajectory::write_csv(std::ostream& out) const {
    const int n = x.empty() ? 0 : static_cast<int>(x.front().size());
    const char fib = rep == Representation::Momentum ? 'p' : 'v';
    out << "t";
    for (int i = 1; i <= n; ++i) out << ",x" << i;
    for (int i = 1; i <= n; ++i) out << ',' << fib << i;
    out << '\n';
    for (std::size_t k = 0; k < t.size(); ++k) {
        out << format_double(t[k]);
        for (int i = 0; i < n; ++i) out << ',' << format_double(x[k][i]);
        for (int i = 0; i < n; ++i) out << ',' << format_double(fiber[k][i]);
        out << '\n';
    }
}

} // namespace nslab
