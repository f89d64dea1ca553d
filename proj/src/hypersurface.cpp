#include "nslab/hypersurface.hpp"

#include "nslab/errors.hpp"
#include "nslab/parallel.hpp"
#include "nslab/report.hpp"

#include <cmath>
#include <ostream>

namespace nslab {

namespace {

Assignment at_params(const Vec& y) { return {{}, {}, {}, {y.data(), static_cast<std::size_t>(y.size())}}; }

Vec unit(int m, int axis) {
    Vec e = Vec::Zero(m);
    e[axis] = 1.0;
    return e;
}

double checked_nu(double nu) {
    if (!(std::abs(nu) >= 1e-12)) throw VanishingNu("nu reached " + format_double(nu));
    return nu;
}

/// Fourth-order central difference of a vector function of one variable.
template <typename F>
Vec stencil5(F&& f, double h) {
    return (-f(2 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2 * h)) / (12.0 * h);
}

} // namespace

// ---------------------------------------------------------------------------

Hypersurface::Hypersurface(int n, std::vector<Expr> chart, Vec lo, Vec hi, Vec base)
    : n_(n), chart_(std::move(chart)), lo_(std::move(lo)), hi_(std::move(hi)), base_(std::move(base)) {
    if (n < 2) throw DimensionTooSmall("a hypersurface needs n >= 2");
    const int m = n - 1;
    if (chart_.size() != static_cast<std::size_t>(n)) throw ValidationError("surface chart needs n components");
    if (lo_.size() != m || hi_.size() != m || base_.size() != m)
        throw ValidationError("surface box and base point need n - 1 coordinates");
    for (int i = 0; i < m; ++i) {
        if (!(lo_[i] < hi_[i])) throw ValidationError("surface box is empty along y" + std::to_string(i + 1));
        if (base_[i] < lo_[i] || base_[i] > hi_[i]) throw ValidationError("surface base point lies outside the box");
    }
    for (const Expr& e : chart_)
        if (e.depends_on(SymbolKind::Base) || e.depends_on(SymbolKind::Velocity) || e.depends_on(SymbolKind::Momentum))
            throw ValidationError("surface chart may only use y symbols");
    std::vector<Expr> d;
    for (int s = 0; s < n; ++s)
        for (int i = 0; i < m; ++i) d.push_back(chart_[static_cast<std::size_t>(s)].derivative(param_sym(i)));
    point_ = CompiledBatch(chart_);
    frame_ = CompiledBatch(d);

    Vec N = raw_normal(base_);
    tangent_frame(*this, base_);
    double scale = N.norm();
    for (int s = 0; s < n; ++s)
        if (std::abs(N[s]) > 1e-12 * scale) {
            orientation_ = N[s] > 0 ? 1.0 : -1.0;
            break;
        }
}

Hypersurface Hypersurface::parse(int n, const std::vector<std::string>& chart, Vec lo, Vec hi, Vec base) {
    if (n < 2) throw DimensionTooSmall("a hypersurface needs n >= 2");
    auto scope = SymbolScope::over_params(n - 1);
    std::vector<Expr> e;
    for (const auto& t : chart) e.push_back(parse_expression(t, scope));
    return Hypersurface(n, std::move(e), std::move(lo), std::move(hi), std::move(base));
}

Vec Hypersurface::point(const Vec& y) const {
    Vec x(n_);
    point_.eval(at_params(y), {x.data(), static_cast<std::size_t>(n_)});
    return x;
}

Mat Hypersurface::frame(const Vec& y) const {
    const int m = n_ - 1;
    std::vector<double> d(static_cast<std::size_t>(n_ * m));
    frame_.eval(at_params(y), d);
    Mat T(n_, m);
    for (int s = 0; s < n_; ++s)
        for (int i = 0; i < m; ++i) T(s, i) = d[static_cast<std::size_t>(s * m + i)];
    return T;
}

Vec Hypersurface::raw_normal(const Vec& y) const {
    Mat T = frame(y);
    const int m = n_ - 1;
    Vec N(n_);
    // det[e_s, T] expanded along the first column.
    for (int s = 0; s < n_; ++s) {
        Mat minor(m, m);
        for (int r = 0, row = 0; r < n_; ++r) {
            if (r == s) continue;
            minor.row(row++) = T.row(r);
        }
        double sign = (s % 2 == 0) ? 1.0 : -1.0;
        N[s] = sign * minor.determinant();
    }
    return orientation_ * N;
}

Mat tangent_frame(const Hypersurface& S, const Vec& y) {
    Mat T = S.frame(y);
    Eigen::JacobiSVD<Mat> svd(T);
    const auto& sv = svd.singularValues();
    if (!(sv.minCoeff() > 1e-10 * std::max(1.0, sv.maxCoeff())))
        throw RankDeficient("tangent frame has rank below n - 1");
    return T;
}

Vec normal_covector(const Hypersurface& S, const Vec& y) {
    tangent_frame(S, y);
    Vec N = S.raw_normal(y);
    return N / N.norm();
}

// ---------------------------------------------------------------------------

ParamGrid ParamGrid::uniform(const Vec& lo, const Vec& hi, int per_axis) {
    if (per_axis < 2) throw InsufficientSamples("a parameter grid needs at least 2 nodes per axis");
    return {lo, hi, std::vector<int>(static_cast<std::size_t>(lo.size()), per_axis)};
}

std::size_t ParamGrid::size() const {
    std::size_t s = 1;
    for (int c : counts) s *= static_cast<std::size_t>(c);
    return s;
}

double ParamGrid::coordinate(int axis, int index) const {
    int c = counts[static_cast<std::size_t>(axis)];
    if (c == 1) return lo[axis];
    if (index == c - 1) return hi[axis];
    return lo[axis] + index * spacing(axis);
}

double ParamGrid::spacing(int axis) const {
    int c = counts[static_cast<std::size_t>(axis)];
    return c > 1 ? (hi[axis] - lo[axis]) / (c - 1) : 0.0;
}

std::vector<int> ParamGrid::unflatten(std::size_t flat) const {
    std::vector<int> idx(counts.size());
    for (int a = axes() - 1; a >= 0; --a) {
        auto c = static_cast<std::size_t>(counts[static_cast<std::size_t>(a)]);
        idx[static_cast<std::size_t>(a)] = static_cast<int>(flat % c);
        flat /= c;
    }
    return idx;
}

std::size_t ParamGrid::flatten(const std::vector<int>& idx) const {
    std::size_t flat = 0;
    for (int a = 0; a < axes(); ++a)
        flat = flat * static_cast<std::size_t>(counts[static_cast<std::size_t>(a)]) +
               static_cast<std::size_t>(idx[static_cast<std::size_t>(a)]);
    return flat;
}

Vec ParamGrid::node(std::size_t flat) const {
    auto idx = unflatten(flat);
    Vec y(axes());
    for (int a = 0; a < axes(); ++a) y[a] = coordinate(a, idx[static_cast<std::size_t>(a)]);
    return y;
}

// ---------------------------------------------------------------------------

Vec pfaff_rhs(const Hypersurface& S, const NewtonianSystem& sys, double nu, const Vec& y) {
    checked_nu(nu);
    const int m = S.params();
    Vec x = S.point(y);
    Mat T = S.frame(y);
    Vec nrm = normal_covector(S, y);
    Vec p = nu * nrm;
    auto h = sys.hamiltonian().eval({x, p}, 1);
    double omega = p.dot(h.Hp);
    if (!(std::abs(omega) > 1e-14)) throw DegenerateOmega("Omega vanishes on the surface lift");
    Vec Q = sys.force_at({x, p}).Q;
    Vec W = h.Hx / omega - Q;
    Vec psi(m);
    for (int i = 0; i < m; ++i) {
        Vec e = unit(m, i) * kSurfaceDelta;
        Vec dn = (normal_covector(S, y + e) - normal_covector(S, y - e)) / (2.0 * kSurfaceDelta);
        psi[i] = -(nu * nu / omega) * dn.dot(h.Hp) - nu * W.dot(T.col(i));
    }
    return psi;
}

double nu_step(const Hypersurface& S, const NewtonianSystem& sys, double nu, const Vec& y, int axis, double step) {
    const int m = S.params();
    Vec e = unit(m, axis);
    auto f = [&](double s, const Vec& v) {
        Vec out(1);
        out[0] = pfaff_rhs(S, sys, v[0], y + s * e)[axis];
        return out;
    };
    Vec v(1);
    v[0] = nu;
    return checked_nu(rk4_step(f, 0.0, v, step)[0]);
}

namespace {

/// nu along one axis line through `start`, at every grid coordinate of that axis.
std::vector<double> sweep_line(const Hypersurface& S, const NewtonianSystem& sys, const ParamGrid& grid,
                               const Vec& start, double nu_start, int axis) {
    const int count = grid.counts[static_cast<std::size_t>(axis)];
    std::vector<double> out(static_cast<std::size_t>(count));
    const double c = start[axis];
    const double tiny = 1e-14 * std::max(1.0, std::abs(c));
    // upward
    Vec y = start;
    double nu = nu_start;
    for (int k = 0; k < count; ++k) {
        double target = grid.coordinate(axis, k);
        if (target < c - tiny) continue;
        double step = target - y[axis];
        if (std::abs(step) > tiny) nu = nu_step(S, sys, nu, y, axis, step);
        y[axis] = target;
        out[static_cast<std::size_t>(k)] = nu;
    }
    // downward
    y = start;
    nu = nu_start;
    for (int k = count - 1; k >= 0; --k) {
        double target = grid.coordinate(axis, k);
        if (target >= c - tiny) continue;
        nu = nu_step(S, sys, nu, y, axis, target - y[axis]);
        y[axis] = target;
        out[static_cast<std::size_t>(k)] = nu;
    }
    return out;
}

struct PathState {
    Vec y;
    double nu;
    std::vector<int> idx;
};

std::vector<double> solve_in_order(const Hypersurface& S, const NewtonianSystem& sys, const ParamGrid& grid,
                                   double nu0, const std::vector<int>& order) {
    std::vector<PathState> states{{S.base(), nu0, std::vector<int>(static_cast<std::size_t>(grid.axes()), 0)}};
    for (int axis : order) {
        std::vector<std::vector<double>> lines(states.size());
        parallel_for(states.size(), [&](std::size_t i) {
            lines[i] = sweep_line(S, sys, grid, states[i].y, states[i].nu, axis);
        });
        std::vector<PathState> next;
        next.reserve(states.size() * static_cast<std::size_t>(grid.counts[static_cast<std::size_t>(axis)]));
        for (std::size_t i = 0; i < states.size(); ++i)
            for (int k = 0; k < grid.counts[static_cast<std::size_t>(axis)]; ++k) {
                PathState s = states[i];
                s.y[axis] = grid.coordinate(axis, k);
                s.nu = lines[i][static_cast<std::size_t>(k)];
                s.idx[static_cast<std::size_t>(axis)] = k;
                next.push_back(std::move(s));
            }
        states = std::move(next);
    }
    std::vector<double> nu(grid.size());
    for (const auto& s : states) nu[grid.flatten(s.idx)] = s.nu;
    return nu;
}

} // namespace

NuField solve_nu_curve(const Hypersurface& S, const NewtonianSystem& sys, double nu0, int count) {
    if (S.dim() != 2) throw ValidationError("the curve solver needs n = 2; use the grid solver");
    if (sys.dim() != 2) throw ValidationError("system and surface dimensions differ");
    if (nu0 == 0.0) throw ZeroNu();
    NuField f;
    f.grid = ParamGrid::uniform(S.lo(), S.hi(), count);
    f.base = S.base();
    f.nu0 = nu0;
    f.nu = sweep_line(S, sys, f.grid, S.base(), nu0, 0);
    return f;
}

NuField solve_nu_grid(const Hypersurface& S, const NewtonianSystem& sys, double nu0, const std::vector<int>& counts) {
    if (S.dim() < 3) throw DimensionTooSmall("the grid solver needs n >= 3; use the curve solver");
    if (sys.dim() != S.dim()) throw ValidationError("system and surface dimensions differ");
    if (nu0 == 0.0) throw ZeroNu();
    const int m = S.params();
    if (counts.size() != static_cast<std::size_t>(m)) throw ValidationError("grid needs one count per parameter");
    for (int c : counts)
        if (c < 2) throw InsufficientSamples("a parameter grid needs at least 2 nodes per axis");
    NuField f;
    f.grid = {S.lo(), S.hi(), counts};
    f.base = S.base();
    f.nu0 = nu0;
    std::vector<int> order(static_cast<std::size_t>(m));
    for (int a = 0; a < m; ++a) order[static_cast<std::size_t>(a)] = a;
    f.nu = solve_in_order(S, sys, f.grid, nu0, order);
    std::vector<int> reversed(order.rbegin(), order.rend());
    auto back = solve_in_order(S, sys, f.grid, nu0, reversed);
    for (std::size_t i = 0; i < back.size(); ++i)
        f.path_discrepancy = std::max(f.path_discrepancy, std::abs(back[i] - f.nu[i]));
    return f;
}

Mat pfaff_compatibility_residual(const Hypersurface& S, const NewtonianSystem& sys, double nu, const Vec& y) {
    const int m = S.params();
    if (m < 2) return Mat(0, 0);
    const double hy = 1e-3;
    const double hnu = 1e-3 * std::max(1.0, std::abs(nu));
    Vec psi = pfaff_rhs(S, sys, nu, y);
    Vec dpsi_dnu = stencil5([&](double s) { return pfaff_rhs(S, sys, nu + s, y); }, hnu);
    Mat theta(m, m);
    for (int j = 0; j < m; ++j) {
        Vec e = unit(m, j);
        Vec dpsi_dy = stencil5([&](double s) { return pfaff_rhs(S, sys, nu, Vec(y + s * e)); }, hy);
        for (int i = 0; i < m; ++i) theta(i, j) = dpsi_dy[i] + dpsi_dnu[i] * psi[j];
    }
    return theta - theta.transpose();
}

Mat pfaff_compatibility_residual(const Hypersurface& S, const NewtonianSystem& sys, const NuField& field,
                                 std::size_t node) {
    if (node >= field.nu.size()) throw ValidationError("grid node out of range");
    return pfaff_compatibility_residual(S, sys, field.nu[node], field.grid.node(node));
}

Vec initial_deviation_rate(const Hypersurface& S, const NewtonianSystem& sys, const NuField& field, std::size_t node) {
    const int m = S.params();
    const auto& grid = field.grid;
    if (node >= field.nu.size()) throw ValidationError("grid node out of range");
    auto idx = grid.unflatten(node);
    auto lift = [&](const std::vector<int>& at) {
        std::size_t f = grid.flatten(at);
        return Vec(field.nu[f] * normal_covector(S, grid.node(f)));
    };
    Vec y = grid.node(node);
    Vec x = S.point(y);
    Mat T = S.frame(y);
    Vec p = lift(idx);
    auto h = sys.hamiltonian().eval({x, p}, 1);
    double omega = p.dot(h.Hp);
    if (!(std::abs(omega) > 1e-14)) throw DegenerateOmega("Omega vanishes on the surface lift");
    Vec Q = sys.force_at({x, p}).Q;
    Vec rate(m);
    for (int i = 0; i < m; ++i) {
        int c = grid.counts[static_cast<std::size_t>(i)];
        if (c < 5) throw InsufficientSamples("deviation rate needs 5 nodes per axis");
        double d = grid.spacing(i);
        auto at = [&](int k) {
            auto j = idx;
            j[static_cast<std::size_t>(i)] = k;
            return lift(j);
        };
        // fourth-order stencils on five nodes, shifted inward near the edges
        int k = idx[static_cast<std::size_t>(i)];
        Vec dp;
        if (k >= 2 && k <= c - 3)
            dp = (at(k - 2) - 8.0 * at(k - 1) + 8.0 * at(k + 1) - at(k + 2)) / (12 * d);
        else if (k == 0)
            dp = (-25.0 * at(0) + 48.0 * at(1) - 36.0 * at(2) + 16.0 * at(3) - 3.0 * at(4)) / (12 * d);
        else if (k == 1)
            dp = (-3.0 * at(0) - 10.0 * at(1) + 18.0 * at(2) - 6.0 * at(3) + at(4)) / (12 * d);
        else if (k == c - 1)
            dp = (25.0 * at(c - 1) - 48.0 * at(c - 2) + 36.0 * at(c - 3) - 16.0 * at(c - 4) + 3.0 * at(c - 5)) / (12 * d);
        else
            dp = (3.0 * at(c - 1) + 10.0 * at(c - 2) - 18.0 * at(c - 3) + 6.0 * at(c - 4) - at(c - 5)) / (12 * d);
        rate[i] = -h.Hp.dot(dp) / omega - h.Hx.dot(T.col(i)) / omega + Q.dot(T.col(i));
    }
    return rate;
}

// ---------------------------------------------------------------------------

double ShiftFamily::max_phi(double t_limit) const {
    double mx = 0.0;
    for (const auto& series : phi)
        for (std::size_t k = 0; k < t.size(); ++k) {
            if (t[k] > t_limit + 1e-12) break;
            for (int i = 0; i < m; ++i)
                mx = std::max(mx, std::abs(series[k * static_cast<std::size_t>(m) + static_cast<std::size_t>(i)]));
        }
    return mx;
}

void ShiftFamily::write_csv(std::ostream& out) const {
    out << "t,y_index";
    for (int i = 1; i <= n; ++i) out << ",x" << i;
    for (int i = 1; i <= n; ++i) out << ",p" << i;
    for (int i = 1; i <= m; ++i) out << ",phi" << i;
    out << '\n';
    for (std::size_t node = 0; node < x.size(); ++node)
        for (std::size_t k = 0; k < t.size(); ++k) {
            out << format_double(t[k]) << ',' << node;
            for (int i = 0; i < n; ++i) out << ',' << format_double(x[node][k][i]);
            for (int i = 0; i < n; ++i) out << ',' << format_double(p[node][k][i]);
            for (int i = 0; i < m; ++i)
                out << ',' << format_double(phi[node][k * static_cast<std::size_t>(m) + static_cast<std::size_t>(i)]);
            out << '\n';
        }
}

ShiftFamily run_shift(const Hypersurface& S, const NewtonianSystem& sys, const NuField& field, double t_end, double h,
                      double delta) {
    if (sys.dim() != S.dim()) throw ValidationError("system and surface dimensions differ");
    if (field.nu.size() != field.grid.size() || field.grid.axes() != S.params())
        throw ValidationError("nu field does not cover the surface grid");
    if (!(delta > 0.0)) throw ValidationError("satellite spacing must be positive");
    const int n = S.dim(), m = S.params();
    const std::size_t nodes = field.grid.size();
    ShiftFamily fam;
    fam.grid = field.grid;
    fam.n = n;
    fam.m = m;
    fam.delta = delta;
    auto [steps, dt] = step_grid(t_end, h);
    fam.h = dt;
    fam.x.resize(nodes);
    fam.p.resize(nodes);
    fam.phi.resize(nodes);

    parallel_for(nodes, [&](std::size_t node) {
        try {
            Vec y = field.grid.node(node);
            double nu = field.nu[node];
            auto center = integrate(sys, CotangentState{S.point(y), nu * normal_covector(S, y)}, t_end, h);
            std::vector<double> phi(center.size() * static_cast<std::size_t>(m));
            for (int a = 0; a < m; ++a) {
                Vec e = unit(m, a) * delta;
                Trajectory side[2];
                for (int sgn = 0; sgn < 2; ++sgn) {
                    double step = sgn == 0 ? delta : -delta;
                    Vec ys = sgn == 0 ? Vec(y + e) : Vec(y - e);
                    double nus = nu_step(S, sys, nu, y, a, step);
                    side[sgn] = integrate(sys, CotangentState{S.point(ys), nus * normal_covector(S, ys)}, t_end, h);
                }
                for (std::size_t k = 0; k < center.size(); ++k) {
                    Vec tau = (side[0].x[k] - side[1].x[k]) / (2.0 * delta);
                    phi[k * static_cast<std::size_t>(m) + static_cast<std::size_t>(a)] = center.fiber[k].dot(tau);
                }
            }
            fam.x[node] = std::move(center.x);
            fam.p[node] = std::move(center.fiber);
            fam.phi[node] = std::move(phi);
        } catch (const NumericError&) {
            rethrow_with_suffix(" (grid node " + std::to_string(node) + ")");
        }
    });
    fam.t.resize(static_cast<std::size_t>(steps) + 1);
    for (int k = 0; k <= steps; ++k) fam.t[static_cast<std::size_t>(k)] = k * dt;
    return fam;
}

// ---------------------------------------------------------------------------

SecondFundamentalForm second_fundamental_form(const Hypersurface& S, const NewtonianSystem& sys, double nu,
                                              const ExtendedConnection& gamma, const Vec& y) {
    const int n = S.dim(), m = S.params();
    if (gamma.dim() != n || sys.dim() != n) throw ValidationError("dimensions of surface, system and connection differ");
    checked_nu(nu);
    const double d = kSurfaceDelta;
    Vec x = S.point(y);
    Mat T = tangent_frame(S, y);
    Vec p = nu * normal_covector(S, y);

    Mat F(n, m);
    auto G = gamma.eval({x, p}, 0).G;
    for (int j = 0; j < m; ++j) {
        Vec e = unit(m, j) * d;
        double nu_p1 = nu_step(S, sys, nu, y, j, d);
        double nu_p2 = nu_step(S, sys, nu_p1, Vec(y + e), j, d);
        double nu_m1 = nu_step(S, sys, nu, y, j, -d);
        double nu_m2 = nu_step(S, sys, nu_m1, Vec(y - e), j, -d);
        Vec dp = (-nu_p2 * normal_covector(S, Vec(y + 2 * e)) + 8.0 * nu_p1 * normal_covector(S, Vec(y + e)) -
                  8.0 * nu_m1 * normal_covector(S, Vec(y - e)) + nu_m2 * normal_covector(S, Vec(y - 2 * e))) /
                 (12.0 * d);
        for (int r = 0; r < n; ++r) {
            double v = dp[r];
            for (int a = 0; a < n; ++a)
                for (int s = 0; s < n; ++s) v -= G(a, s, r) * p[a] * T(s, j);
            F(r, j) = v;
        }
    }
    Mat P = projector(sys.hamiltonian(), {x, p}).P;
    Mat Tplus = (T.transpose() * T).inverse() * T.transpose();
    SecondFundamentalForm out;
    out.b = -P.transpose() * F * Tplus * P;
    out.beta = T.transpose() * out.b * T;
    out.symmetry_defect = max_abs(out.b - out.b.transpose());
    return out;
}

SecondFundamentalForm second_fundamental_form(const Hypersurface& S, const NewtonianSystem& sys, const NuField& field,
                                              const ExtendedConnection& gamma, std::size_t node) {
    if (node >= field.nu.size()) throw ValidationError("grid node out of range");
    return second_fundamental_form(S, sys, field.nu[node], gamma, field.grid.node(node));
}

PrescribedSurface surface_with_prescribed_form(const Vec& x0, const Vec& p, const Mat& beta, double nu0, double radius) {
    const int n = static_cast<int>(p.size());
    const int m = n - 1;
    if (n < 2) throw DimensionTooSmall("prescribed surface needs n >= 2");
    if (x0.size() != n) throw ValidationError("point and covector dimensions differ");
    if (p.norm() == 0.0) throw ZeroMomentum("prescribed surface needs p != 0");
    if (nu0 == 0.0) throw ZeroNu();
    if (beta.rows() != m || beta.cols() != m) throw ValidationError("beta must be (n-1) x (n-1)");
    if (max_abs(beta - beta.transpose()) > 1e-12 * std::max(1.0, max_abs(beta)))
        throw ValidationError("beta must be symmetric");

    Mat qr = Eigen::HouseholderQR<Mat>(p).householderQ() * Mat::Identity(n, n);
    Mat E(n, n);
    E.leftCols(m) = qr.rightCols(m); // orthonormal basis of ker p
    E.col(m) = nu0 * p / p.squaredNorm();

    Expr z = Expr(0.0);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            if (beta(i, j) != 0.0)
                z = z + Expr(beta(i, j) / (2.0 * nu0)) * Expr::symbol(param_sym(i)) * Expr::symbol(param_sym(j));
    std::vector<Expr> chart;
    for (int s = 0; s < n; ++s) {
        Expr xs = Expr(x0[s]);
        for (int i = 0; i < m; ++i)
            if (E(s, i) != 0.0) xs = xs + Expr(E(s, i)) * Expr::symbol(param_sym(i));
        if (E(s, m) != 0.0) xs = xs + Expr(E(s, m)) * z;
        chart.push_back(xs);
    }
    Hypersurface S(n, std::move(chart), Vec::Constant(m, -radius), Vec::Constant(m, radius), Vec::Zero(m));
    double nu_base = p.dot(normal_covector(S, Vec::Zero(m)));
    return {std::move(S), E, nu_base};
}

} // namespace nslab
