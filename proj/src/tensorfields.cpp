#include "nslab/tensorfields.hpp"

#include "nslab/errors.hpp"

#include <cmath>
#include <utility>

namespace nslab {

namespace {

std::size_t power(int n, int k) {
    std::size_t r = 1;
    for (int i = 0; i < k; ++i) r *= static_cast<std::size_t>(n);
    return r;
}

std::vector<int> decode(std::size_t flat, int n, int rank) {
    std::vector<int> idx(static_cast<std::size_t>(rank));
    for (int t = rank - 1; t >= 0; --t) {
        idx[static_cast<std::size_t>(t)] = static_cast<int>(flat % static_cast<std::size_t>(n));
        flat /= static_cast<std::size_t>(n);
    }
    return idx;
}

std::size_t encode(const std::vector<int>& idx, int n) {
    std::size_t flat = 0;
    for (int i : idx) flat = flat * static_cast<std::size_t>(n) + static_cast<std::size_t>(i);
    return flat;
}

Symbol fiber_sym(Representation rep, int i) { return rep == Representation::Momentum ? mom_sym(i) : vel_sym(i); }

Assignment at_point(Representation rep, const Vec& x, const Vec& fiber) {
    std::span<const double> xs{x.data(), static_cast<std::size_t>(x.size())};
    std::span<const double> fs{fiber.data(), static_cast<std::size_t>(fiber.size())};
    if (rep == Representation::Momentum) return {xs, {}, fs, {}};
    return {xs, fs, {}, {}};
}

void require_symmetric(int n, const std::vector<Expr>& t, const char* what) {
    if (t.size() != power(n, 3))
        throw ValidationError(std::string(what) + ": expected " + std::to_string(power(n, 3)) + " entries");
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                const Expr& a = t[static_cast<std::size_t>((k * n + i) * n + j)];
                const Expr& b = t[static_cast<std::size_t>((k * n + j) * n + i)];
                if (a.node() != b.node() && a.str() != b.str())
                    throw ValidationError(std::string(what) + " is not symmetric in its lower indices at k=" +
                                          std::to_string(k + 1) + ", i=" + std::to_string(i + 1) +
                                          ", j=" + std::to_string(j + 1));
            }
    for (const Expr& e : t)
        if (e.depends_on(SymbolKind::Velocity) || e.depends_on(SymbolKind::Param))
            throw ValidationError(std::string(what) + " may only use x and p symbols");
}

std::vector<Expr> parse_all(int n, const std::vector<std::string>& texts) {
    auto scope = SymbolScope::over_momentum(n);
    std::vector<Expr> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(parse_expression(t, scope));
    return out;
}

} // namespace

const char* to_string(Representation r) { return r == Representation::Momentum ? "momentum" : "velocity"; }

// ---------------------------------------------------------------------------

ExtendedTensorField::ExtendedTensorField(int n, int upper, int lower, Representation rep, std::vector<Expr> components)
    : n_(n), upper_(upper), lower_(lower), rep_(rep), comps_(std::move(components)) {
    if (n < 1 || upper < 0 || lower < 0) throw ValidationError("invalid tensor valence");
    if (comps_.size() != power(n, upper + lower))
        throw ValidationError("tensor field needs " + std::to_string(power(n, upper + lower)) + " components, got " +
                              std::to_string(comps_.size()));
    SymbolKind wrong = rep == Representation::Momentum ? SymbolKind::Velocity : SymbolKind::Momentum;
    for (const Expr& e : comps_)
        if (e.depends_on(wrong) || e.depends_on(SymbolKind::Param))
            throw RepresentationMismatch(std::string("component uses symbols outside the ") + to_string(rep) +
                                         " representation");
    compiled_ = CompiledBatch(comps_);
}

ExtendedTensorField ExtendedTensorField::scalar(int n, Representation rep, Expr value) {
    return ExtendedTensorField(n, 0, 0, rep, {std::move(value)});
}

const Expr& ExtendedTensorField::component(std::span<const int> indices) const {
    if (indices.size() != static_cast<std::size_t>(upper_ + lower_)) throw ValidationError("wrong index count");
    std::size_t flat = 0;
    for (int i : indices) {
        if (i < 0 || i >= n_) throw ValidationError("index out of range");
        flat = flat * static_cast<std::size_t>(n_) + static_cast<std::size_t>(i);
    }
    return comps_[flat];
}

std::vector<double> ExtendedTensorField::eval(const Vec& x, const Vec& fiber) const {
    std::vector<double> out(comps_.size());
    compiled_.eval(at_point(rep_, x, fiber), out);
    return out;
}

// ---------------------------------------------------------------------------

ExtendedConnection::ExtendedConnection(int n, std::vector<Expr> gamma) : n_(n), g_(std::move(gamma)) {
    require_symmetric(n, g_, "connection");
    // Mirror the i <= j entries so both slots share one node.
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) g_[idx(k, j, i)] = g_[idx(k, i, j)];
    for (const Expr& e : g_) flat_ = flat_ && e.is_zero();

    std::vector<Expr> first = g_;
    for (int m = 0; m < n; ++m)
        for (const Expr& e : g_) first.push_back(e.derivative(base_sym(m)));
    for (int m = 0; m < n; ++m)
        for (const Expr& e : g_) first.push_back(e.derivative(mom_sym(m)));
    order0_ = CompiledBatch(g_);
    order1_ = CompiledBatch(first);
}

ExtendedConnection ExtendedConnection::flat(int n) { return ExtendedConnection(n, std::vector<Expr>(power(n, 3))); }

ExtendedConnection ExtendedConnection::parse(int n, const std::vector<std::string>& texts) {
    return ExtendedConnection(n, parse_all(n, texts));
}

std::vector<Expr> ExtendedConnection::in_velocity_representation(const LagrangianModel& L) const {
    std::vector<std::pair<Symbol, Expr>> bind;
    for (int i = 0; i < n_; ++i) bind.emplace_back(mom_sym(i), L.dv(i));
    std::vector<Expr> out;
    out.reserve(g_.size());
    for (const Expr& e : g_) out.push_back(substitute(e, bind));
    return out;
}

ExtendedConnection::Jet ExtendedConnection::eval(const CotangentState& c, int order) const {
    Jet jet;
    jet.G = Tensor3(n_);
    Assignment a = at_point(Representation::Momentum, c.x, c.p);
    if (order <= 0) {
        if (!flat_) order0_.eval(a, jet.G.data());
        return jet;
    }
    jet.dGdx = Tensor4(n_);
    jet.dGdp = Tensor4(n_);
    if (flat_) return jet;
    std::vector<double> all(order1_.size());
    order1_.eval(a, all);
    std::size_t n3 = power(n_, 3);
    std::copy_n(all.begin(), n3, jet.G.data().begin());
    for (int m = 0; m < n_; ++m)
        for (std::size_t f = 0; f < n3; ++f) {
            jet.dGdx.data()[f * static_cast<std::size_t>(n_) + static_cast<std::size_t>(m)] =
                all[n3 + static_cast<std::size_t>(m) * n3 + f];
            jet.dGdp.data()[f * static_cast<std::size_t>(n_) + static_cast<std::size_t>(m)] =
                all[n3 * (1 + static_cast<std::size_t>(n_)) + static_cast<std::size_t>(m) * n3 + f];
        }
    return jet;
}

ConnectionShift::ConnectionShift(int n, std::vector<Expr> t) : n_(n), t_(std::move(t)) {
    require_symmetric(n, t_, "connection shift");
}

ConnectionShift ConnectionShift::parse(int n, const std::vector<std::string>& texts) {
    return ConnectionShift(n, parse_all(n, texts));
}

ExtendedConnection shifted(const ExtendedConnection& gamma, const ConnectionShift& t) {
    if (gamma.dim() != t.dim()) throw ValidationError("connection and shift dimensions differ");
    std::vector<Expr> sum = gamma.coefficients();
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = sum[i] + t.components()[i];
    return ExtendedConnection(gamma.dim(), std::move(sum));
}

// ---------------------------------------------------------------------------

ExtendedTensorField vertical_gradient(const ExtendedTensorField& f) {
    const int n = f.dim();
    const int r = f.upper(), s = f.lower();
    const bool mom = f.representation() == Representation::Momentum;
    const int rank = r + s + 1;
    std::vector<Expr> out(power(n, rank));
    for (std::size_t flat = 0; flat < out.size(); ++flat) {
        auto idx = decode(flat, n, rank);
        // momentum: new upper index at position r; velocity: new lower index last
        int pos = mom ? r : rank - 1;
        int q = idx[static_cast<std::size_t>(pos)];
        idx.erase(idx.begin() + pos);
        out[flat] = f.components()[encode(idx, n)].derivative(fiber_sym(f.representation(), q));
    }
    return mom ? ExtendedTensorField(n, r + 1, s, f.representation(), std::move(out))
               : ExtendedTensorField(n, r, s + 1, f.representation(), std::move(out));
}

ExtendedTensorField horizontal_gradient(const ExtendedTensorField& f, const ExtendedConnection& gamma,
                                        const LagrangianModel* L) {
    const int n = f.dim();
    if (gamma.dim() != n) throw ValidationError("connection dimension differs from field dimension");
    const bool mom = f.representation() == Representation::Momentum;
    std::vector<Expr> G;
    if (mom) {
        G = gamma.coefficients();
    } else {
        if (!L) throw RepresentationMismatch("velocity-representation gradient needs the Lagrangian");
        if (L->dim() != n) throw ValidationError("Lagrangian dimension differs from field dimension");
        G = gamma.in_velocity_representation(*L);
    }
    auto Gam = [&](int k, int i, int j) -> const Expr& { return G[static_cast<std::size_t>((k * n + i) * n + j)]; };

    const int r = f.upper(), s = f.lower();
    const int rank = r + s;
    const auto& X = f.components();

    // Fiber partials of every component, reused across q.
    std::vector<std::vector<Expr>> dfib(X.size());
    for (std::size_t c = 0; c < X.size(); ++c)
        for (int b = 0; b < n; ++b) dfib[c].push_back(X[c].derivative(fiber_sym(f.representation(), b)));

    std::vector<Expr> out(power(n, rank + 1));
    for (std::size_t flat = 0; flat < out.size(); ++flat) {
        auto full = decode(flat, n, rank + 1);
        int q = full.back();
        std::vector<int> idx(full.begin(), full.end() - 1);
        std::size_t c = encode(idx, n);
        Expr acc = X[c].derivative(base_sym(q));
        for (int a = 0; a < n; ++a) {
            Expr fib = mom ? Expr::symbol(mom_sym(a)) : Expr::symbol(vel_sym(a));
            for (int b = 0; b < n; ++b) {
                if (mom) {
                    // + p_a Gamma^a_qb dX/dp_b
                    acc = acc + fib * Gam(a, q, b) * dfib[c][static_cast<std::size_t>(b)];
                } else {
                    // - v^a Gamma^b_qa dX/dv^b
                    acc = acc - fib * Gam(b, q, a) * dfib[c][static_cast<std::size_t>(b)];
                }
            }
        }
        for (int t = 0; t < rank; ++t) {
            int orig = idx[static_cast<std::size_t>(t)];
            for (int a = 0; a < n; ++a) {
                auto moved = idx;
                moved[static_cast<std::size_t>(t)] = a;
                const Expr& Xa = X[encode(moved, n)];
                if (t < r) acc = acc + Gam(orig, q, a) * Xa;
                else acc = acc - Gam(a, q, orig) * Xa;
            }
        }
        out[flat] = acc;
    }
    return ExtendedTensorField(n, r, s + 1, f.representation(), std::move(out));
}

ExtendedTensorField to_velocity(const ExtendedTensorField& f, const LagrangianModel& L) {
    if (f.representation() != Representation::Momentum)
        throw RepresentationMismatch("to_velocity expects a momentum-representation field");
    if (L.dim() != f.dim()) throw ValidationError("Lagrangian dimension differs from field dimension");
    std::vector<std::pair<Symbol, Expr>> bind;
    for (int i = 0; i < f.dim(); ++i) bind.emplace_back(mom_sym(i), L.dv(i));
    std::vector<Expr> out;
    for (const Expr& e : f.components()) out.push_back(substitute(e, bind));
    return ExtendedTensorField(f.dim(), f.upper(), f.lower(), Representation::Velocity, std::move(out));
}

ComposedField::ComposedField(ExtendedTensorField source, std::shared_ptr<const LagrangianModel> L)
    : source_(std::move(source)), L_(std::move(L)) {
    if (source_.representation() != Representation::Velocity)
        throw RepresentationMismatch("composition with the inverse Legendre map expects a velocity field");
    if (!L_ || L_->dim() != source_.dim()) throw ValidationError("missing or mismatched Lagrangian");
}

std::vector<double> ComposedField::eval(const Vec& x, const Vec& p) const {
    auto inv = inverse_legendre(*L_, {x, p});
    return source_.eval(x, inv.q.v);
}

ComposedField to_momentum(const ExtendedTensorField& f, std::shared_ptr<const LagrangianModel> L) {
    return ComposedField(f, std::move(L));
}

// ---------------------------------------------------------------------------

Projector projector(const HamiltonJet& h, const Vec& p) {
    if (p.norm() == 0.0) throw ZeroMomentum("projector needs p != 0");
    double omega = p.dot(h.Hp);
    if (!(std::abs(omega) > 1e-14)) throw DegenerateOmega("Omega vanishes at the projector point");
    Mat P = Mat::Identity(p.size(), p.size()) - h.Hp * p.transpose() / omega;
    return {P};
}

Projector projector(const HamiltonianModel& H, const CotangentState& c) {
    if (c.p.norm() == 0.0) throw ZeroMomentum("projector needs p != 0");
    return projector(H.eval(c, 1), c.p);
}

CurvaturePair curvature_tensors(const ExtendedConnection::Jet& jet, const Vec& p) {
    const int n = jet.G.dim();
    CurvaturePair out{Tensor4(n), Tensor4(n)};
    const auto& G = jet.G;
    // N(i, m) = sum_a p_a Gamma^a_im
    Mat N = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int m = 0; m < n; ++m)
            for (int a = 0; a < n; ++a) N(i, m) += p[a] * G(a, i, m);
    // delta_i Gamma^k_jr = dGamma^k_jr/dx^i + N(i, m) dGamma^k_jr/dp_m
    auto hor = [&](int k, int j, int r, int i) {
        double v = jet.dGdx(k, j, r, i);
        for (int m = 0; m < n; ++m) v += N(i, m) * jet.dGdp(k, j, r, m);
        return v;
    };
    for (int k = 0; k < n; ++k)
        for (int r = 0; r < n; ++r)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    out.D(k, r, i, j) = -jet.dGdp(k, i, j, r);
                    double v = hor(k, j, r, i) - hor(k, i, r, j);
                    for (int m = 0; m < n; ++m) v += G(k, i, m) * G(m, j, r) - G(k, j, m) * G(m, i, r);
                    out.R(k, r, i, j) = v;
                }
    return out;
}

CurvaturePair curvature_tensors(const ExtendedConnection& gamma, const CotangentState& c) {
    return curvature_tensors(gamma.eval(c, 1), c.p);
}

CommutatorResidual commutator_residual(const HamiltonianModel& H, const ExtendedConnection& gamma,
                                       const CotangentState& c) {
    const Expr* h = H.expression();
    if (!h) throw ValidationError("commutator residual needs a Hamiltonian expression");
    if (c.p.norm() == 0.0) throw ZeroMomentum("commutator residual needs p != 0");
    const int n = H.dim();
    auto scalar = ExtendedTensorField::scalar(n, Representation::Momentum, *h);
    auto hor = horizontal_gradient(scalar, gamma);   // (0,1): [j]
    auto ver = vertical_gradient(scalar);            // (1,0): [j]
    auto hh = horizontal_gradient(hor, gamma).eval(c.x, c.p); // [j][i] = nabla_i nabla_j H
    auto hv = horizontal_gradient(ver, gamma).eval(c.x, c.p); // [j][i] = nabla_i dH/dp_j
    auto vh = vertical_gradient(hor).eval(c.x, c.p);          // [j][i] = d/dp_j nabla_i H
    auto dH = ver.eval(c.x, c.p);
    auto curv = curvature_tensors(gamma, c);

    auto at = [n](const std::vector<double>& a, int u, int v) { return a[static_cast<std::size_t>(u * n + v)]; };
    CommutatorResidual out{Mat(n, n), Mat(n, n), Mat(n, n)};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double comm = at(hh, j, i) - at(hh, i, j);
            double mixed = at(hv, j, i) - at(vh, j, i);
            double rterm = 0.0, dterm = 0.0;
            for (int k = 0; k < n; ++k)
                for (int s = 0; s < n; ++s) {
                    rterm += c.p[k] * curv.R(k, s, i, j) * dH[static_cast<std::size_t>(s)];
                    dterm += c.p[k] * curv.D(k, j, i, s) * dH[static_cast<std::size_t>(s)];
                }
            out.horizontal(i, j) = comm - rterm;
            out.horizontal_as_printed(i, j) = comm + rterm;
            out.mixed(i, j) = mixed - dterm;
        }
    return out;
}

Mat concordance_residual(const LagrangianModel& L, const ExtendedConnection& gamma, const TangentState& q) {
    const int n = L.dim();
    std::vector<Expr> lv;
    for (int s = 0; s < n; ++s) lv.push_back(L.dv(s));
    ExtendedTensorField f(n, 0, 1, Representation::Velocity, std::move(lv));
    auto vals = horizontal_gradient(f, gamma, &L).eval(q.x, q.v); // [s][q]
    Mat A(n, n);
    for (int qq = 0; qq < n; ++qq)
        for (int s = 0; s < n; ++s) A(qq, s) = vals[static_cast<std::size_t>(s * n + qq)];
    return A;
}

Mat concordance_residual_momentum(const HamiltonianModel& H, const ExtendedConnection& gamma,
                                  const CotangentState& c) {
    const int n = H.dim();
    auto h = H.eval(c, 2);
    auto G = gamma.eval(c, 0).G;
    Mat B(n, n);
    for (int q = 0; q < n; ++q)
        for (int s = 0; s < n; ++s) {
            double v = h.Hpx(s, q);
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) v += c.p[a] * G(a, q, b) * h.Hpp(s, b);
            for (int a = 0; a < n; ++a) v += G(s, q, a) * h.Hp[a];
            B(q, s) = v;
        }
    return B;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> time_derivative(const std::vector<std::vector<double>>& f, std::size_t k, double h) {
    const std::size_t N = f.size();
    std::vector<double> d(f[k].size());
    for (std::size_t c = 0; c < d.size(); ++c) {
        if (k == 0) d[c] = (-3.0 * f[0][c] + 4.0 * f[1][c] - f[2][c]) / (2.0 * h);
        else if (k == N - 1) d[c] = (3.0 * f[N - 1][c] - 4.0 * f[N - 2][c] + f[N - 3][c]) / (2.0 * h);
        else d[c] = (f[k + 1][c] - f[k - 1][c]) / (2.0 * h);
    }
    return d;
}

TensorSeries covariant_core(const TensorSeries& series, const std::vector<Vec>& xs, const std::vector<Vec>& ps,
                            const ExtendedConnection& gamma) {
    const std::size_t N = series.values.size();
    if (N < 3) throw InsufficientSamples("covariant time derivative needs at least 3 samples");
    if (xs.size() != N) throw ValidationError("lift and series lengths differ");
    if (!(series.h > 0.0)) throw ValidationError("sample spacing must be positive");
    const int n = series.n;
    const int rank = series.upper + series.lower;
    if (gamma.dim() != n) throw ValidationError("connection dimension differs from series dimension");
    for (const auto& v : series.values)
        if (v.size() != power(n, rank)) throw ValidationError("series sample has the wrong component count");

    std::vector<std::vector<double>> xv(N);
    for (std::size_t k = 0; k < N; ++k) xv[k] = std::vector<double>(xs[k].data(), xs[k].data() + n);

    TensorSeries out{n, series.upper, series.lower, series.h, {}};
    out.values.resize(N);
    for (std::size_t k = 0; k < N; ++k) {
        auto d = time_derivative(series.values, k, series.h);
        if (!gamma.is_flat() && rank > 0) {
            auto xdot = time_derivative(xv, k, series.h);
            auto G = gamma.eval({xs[k], ps[k]}, 0).G;
            const auto& X = series.values[k];
            for (std::size_t flat = 0; flat < d.size(); ++flat) {
                auto idx = decode(flat, n, rank);
                for (int t = 0; t < rank; ++t) {
                    int orig = idx[static_cast<std::size_t>(t)];
                    for (int m = 0; m < n; ++m)
                        for (int a = 0; a < n; ++a) {
                            auto moved = idx;
                            moved[static_cast<std::size_t>(t)] = a;
                            double Xa = X[encode(moved, n)];
                            if (t < series.upper) d[flat] += xdot[static_cast<std::size_t>(m)] * G(orig, m, a) * Xa;
                            else d[flat] -= xdot[static_cast<std::size_t>(m)] * G(a, m, orig) * Xa;
                        }
                }
            }
        }
        out.values[k] = std::move(d);
    }
    return out;
}

} // namespace

TensorSeries covariant_time_derivative(const TensorSeries& series, const std::vector<CotangentState>& lift,
                                       const ExtendedConnection& gamma) {
    std::vector<Vec> xs, ps;
    for (const auto& c : lift) {
        xs.push_back(c.x);
        ps.push_back(c.p);
    }
    return covariant_core(series, xs, ps, gamma);
}

TensorSeries covariant_time_derivative(const TensorSeries& series, const std::vector<TangentState>& lift,
                                       const ExtendedConnection& gamma, const LagrangianModel& L) {
    std::vector<Vec> xs, ps;
    for (const auto& q : lift) {
        xs.push_back(q.x);
        ps.push_back(legendre(L, q).p);
    }
    return covariant_core(series, xs, ps, gamma);
}

} // namespace nslab
