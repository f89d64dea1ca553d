#include "nslab/errors.hpp"
#include "nslab/tensorfields.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <array>
#include <cmath>

using namespace nslab;

namespace {

Expr X(int i) { return Expr::symbol(base_sym(i)); }
Expr P(int i) { return Expr::symbol(mom_sym(i)); }

/// Symmetric Gamma with entries a + b*x_i + c*p_j + d*x_i*p_j, random i, j.
ExtendedConnection random_connection(Rng& rng, int n) {
    std::vector<Expr> g(static_cast<std::size_t>(n * n * n));
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                int xi = static_cast<int>(rng.uniform() * n);
                int pj = static_cast<int>(rng.uniform() * n);
                Expr e = Expr(rng.uniform(-0.5, 0.5)) + Expr(rng.uniform(-0.5, 0.5)) * X(xi) +
                         Expr(rng.uniform(-0.5, 0.5)) * P(pj) +
                         Expr(rng.uniform(-0.3, 0.3)) * X(xi) * P(pj);
                g[static_cast<std::size_t>((k * n + i) * n + j)] = e;
                g[static_cast<std::size_t>((k * n + j) * n + i)] = e;
            }
    return ExtendedConnection(n, g);
}

ExtendedConnection constant_connection(Rng& rng, int n) {
    std::vector<Expr> g(static_cast<std::size_t>(n * n * n));
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                Expr e(rng.uniform(-1.0, 1.0));
                g[static_cast<std::size_t>((k * n + i) * n + j)] = e;
                g[static_cast<std::size_t>((k * n + j) * n + i)] = e;
            }
    return ExtendedConnection(n, g);
}

/// A momentum-representation covector field with genuine x and p dependence.
ExtendedTensorField sample_covector(int n) {
    std::vector<Expr> c;
    for (int s = 0; s < n; ++s)
        c.push_back(sin(X(s)) * P((s + 1) % n) + P(s) * P(s) * Expr(0.5) + X((s + 1) % n) * P(0));
    return ExtendedTensorField(n, 0, 1, Representation::Momentum, c);
}

ExtendedTensorField sample_scalar(int n) {
    Expr e = Expr(0.0);
    for (int s = 0; s < n; ++s) e = e + cos(X(s)) * P(s) * P(s) + Expr(0.3) * X(s) * P((s + 1) % n);
    return ExtendedTensorField::scalar(n, Representation::Momentum, e);
}

HamiltonianModel euclid_sine_h(int n) {
    Expr h = Expr(0.0);
    for (int i = 0; i < n; ++i) h = h + Expr(0.5) * P(i) * P(i);
    return HamiltonianModel::from_expression(n, h + sin(X(0)));
}

Vec random_vec(Rng& rng, int n, double lo, double hi) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
    return v;
}

} // namespace

TEST_CASE("vertical gradient examples") {
    int n = 3;
    Expr half = Expr(0.0), sq = Expr(0.0);
    for (int i = 0; i < n; ++i) {
        half = half + Expr(0.5) * P(i) * P(i);
        sq = sq + P(i) * P(i);
    }
    Vec x = Vec::Zero(n), p(n);
    p << 0.4, -1.2, 2.0;
    auto g1 = vertical_gradient(ExtendedTensorField::scalar(n, Representation::Momentum, half));
    auto g2 = vertical_gradient(ExtendedTensorField::scalar(n, Representation::Momentum, sq));
    CHECK(g1.upper() == 1);
    CHECK(g1.lower() == 0);
    auto a = g1.eval(x, p), b = g2.eval(x, p);
    for (int q = 0; q < n; ++q) {
        CHECK(a[static_cast<std::size_t>(q)] == doctest::Approx(p[q]));
        CHECK(b[static_cast<std::size_t>(q)] == doctest::Approx(2 * p[q]));
    }
    // velocity representation appends a lower index
    auto L = oracle::lagrangian(n, oracle::quartic_text(n));
    auto gv = vertical_gradient(ExtendedTensorField::scalar(n, Representation::Velocity, L->expr()));
    CHECK(gv.upper() == 0);
    CHECK(gv.lower() == 1);
}

TEST_CASE("field construction rejects wrong sizes and symbols") {
    CHECK_THROWS_AS(ExtendedTensorField(2, 1, 0, Representation::Momentum, {P(0)}), ValidationError);
    CHECK_THROWS_AS(ExtendedTensorField::scalar(2, Representation::Momentum, Expr::symbol(vel_sym(0))),
                    RepresentationMismatch);
    std::vector<Expr> g(8);
    g[0 * 4 + 0 * 2 + 1] = X(0);
    g[0 * 4 + 1 * 2 + 0] = X(1);
    CHECK_THROWS_AS(ExtendedConnection(2, g), ValidationError);
    CHECK_THROWS_AS(ConnectionShift(2, g), ValidationError);
    CHECK_THROWS_AS(ExtendedConnection(2, std::vector<Expr>(7)), ValidationError);
}

TEST_CASE("vertical gradients commute with the Legendre map through the metric") {
    // d/dv^q (X o lambda)_s = sum_k g_qk (d/dp_k X_s) o lambda
    Rng rng(11);
    for (int n : {2, 3}) {
        auto L = oracle::lagrangian(n, oracle::quartic_text(n));
        auto Xp = sample_covector(n);
        auto vp = vertical_gradient(Xp);                        // [k][s]
        auto vv = vertical_gradient(to_velocity(Xp, *L));        // [s][q]
        for (int trial = 0; trial < 25; ++trial) {
            TangentState q{random_vec(rng, n, -1, 1), rng.vector_with_norm_in(n, 0.3, 2.0)};
            auto c = legendre(*L, q);
            Mat g = vertical_metrics(*L, q).g;
            auto lhs = vv.eval(q.x, q.v);
            auto rhs = vp.eval(c.x, c.p);
            for (int s = 0; s < n; ++s)
                for (int qq = 0; qq < n; ++qq) {
                    double expect = 0.0;
                    for (int k = 0; k < n; ++k) expect += g(qq, k) * rhs[static_cast<std::size_t>(k * n + s)];
                    CHECK(oracle::close_rel(lhs[static_cast<std::size_t>(s * n + qq)], expect, 1e-10, 1e-8));
                }
        }
    }
}

TEST_CASE("momentum gradient of a composed velocity field uses the inverse metric") {
    // d/dp_q (Y o lambda^-1) = sum_k g^qk (d/dv^k Y) o lambda^-1, checked by differences in p
    Rng rng(12);
    int n = 2;
    auto L = oracle::lagrangian(n, oracle::quartic_text(n));
    Expr y = Expr::symbol(vel_sym(0)) * Expr::symbol(vel_sym(1)) + sin(X(0)) * Expr::symbol(vel_sym(0));
    auto Y = ExtendedTensorField::scalar(n, Representation::Velocity, y);
    auto composed = to_momentum(Y, L);
    auto dY = vertical_gradient(Y);
    for (int trial = 0; trial < 10; ++trial) {
        Vec x = random_vec(rng, n, -1, 1);
        Vec p = rng.vector_with_norm_in(n, 0.5, 2.0);
        auto v = inverse_legendre(*L, {x, p}).q.v;
        Mat ginv = vertical_metrics(*L, {x, v}).g_inv;
        auto dyv = dY.eval(x, v);
        auto f = [&](const Vec& pp) { return composed.eval(x, pp)[0]; };
        Vec fd = oracle::gradient(f, p, 1e-5);
        for (int q = 0; q < n; ++q) {
            double expect = ginv(q, 0) * dyv[0] + ginv(q, 1) * dyv[1];
            CHECK(oracle::close_rel(fd[q], expect, 1e-7, 1e-8));
        }
    }
}

TEST_CASE("representation conversion") {
    Rng rng(13);
    int n = 2;
    // Euclidean: lambda is the identity on fibers.
    auto E = oracle::lagrangian(n, oracle::euclidean_text(n));
    auto Xp = sample_scalar(n);
    auto Xv = to_velocity(Xp, *E);
    Vec x(2), w(2);
    x << 0.3, -0.2;
    w << 1.1, 0.7;
    CHECK(Xv.eval(x, w)[0] == doctest::Approx(Xp.eval(x, w)[0]).epsilon(1e-14));

    // Omega: omega_v composed with the inverse equals omega_p.
    auto Lq = oracle::lagrangian(n, oracle::quartic_text(n));
    Expr om = Expr(0.0);
    for (int i = 0; i < n; ++i) om = om + Expr::symbol(vel_sym(i)) * Lq->dv(i);
    auto omega_field = to_momentum(ExtendedTensorField::scalar(n, Representation::Velocity, om), Lq);
    auto H = HamiltonianModel::from_lagrangian(Lq);
    for (int t = 0; t < 20; ++t) {
        CotangentState c{random_vec(rng, n, -1, 1), rng.vector_with_norm_in(n, 0.2, 3.0)};
        CHECK(oracle::close_rel(omega_field.eval(c.x, c.p)[0], omega_p(H, c), 1e-9));
        // momentum -> velocity -> momentum returns the original field
        auto back = to_momentum(to_velocity(Xp, *Lq), Lq);
        CHECK(oracle::close_rel(back.eval(c.x, c.p)[0], Xp.eval(c.x, c.p)[0], 1e-9));
    }
    CHECK_THROWS_AS(to_velocity(Xv, *E), RepresentationMismatch);
    CHECK_THROWS_AS(to_momentum(Xp, E), RepresentationMismatch);
}

TEST_CASE("horizontal gradient with the flat connection is the x-partial") {
    int n = 2;
    auto f = sample_covector(n);
    auto g = horizontal_gradient(f, ExtendedConnection::flat(n));
    CHECK(g.lower() == 2);
    Vec x(2), p(2);
    x << 0.4, 0.9;
    p << -0.3, 1.5;
    auto vals = g.eval(x, p);
    for (int s = 0; s < n; ++s)
        for (int q = 0; q < n; ++q) {
            auto fs = [&](const Vec& xx) { return f.eval(xx, p)[static_cast<std::size_t>(s)]; };
            CHECK(vals[static_cast<std::size_t>(s * n + q)] == doctest::Approx(oracle::central(fs, x, q, 1e-6)).epsilon(1e-8));
        }
    auto constant = ExtendedTensorField::scalar(n, Representation::Momentum, P(0) * P(1));
    auto z = horizontal_gradient(constant, ExtendedConnection::flat(n)).eval(x, p);
    CHECK(z[0] == 0.0);
    CHECK(z[1] == 0.0);
    CHECK_THROWS_AS(horizontal_gradient(to_velocity(f, *oracle::lagrangian(n, oracle::euclidean_text(n))),
                                        ExtendedConnection::flat(n)),
                    RepresentationMismatch);
}

TEST_CASE("horizontal gradients in the two representations differ by the concordance term") {
    // nabla_q (X o lambda) - (nabla_q X) o lambda = sum_s (nabla_q dL/dv^s) (d/dp_s X) o lambda
    Rng rng(14);
    for (int n : {2, 3}) {
        auto L = oracle::lagrangian(n, oracle::potential_text(n) + " + 0.1*x1*v1*v2");
        auto gamma = random_connection(rng, n);
        auto Xp = sample_scalar(n);
        auto hv = horizontal_gradient(to_velocity(Xp, *L), gamma, L.get());
        auto hp = horizontal_gradient(Xp, gamma);
        auto vp = vertical_gradient(Xp);
        for (int trial = 0; trial < 15; ++trial) {
            TangentState q{random_vec(rng, n, -1, 1), rng.vector_with_norm_in(n, 0.3, 2.0)};
            auto c = legendre(*L, q);
            Mat A = concordance_residual(*L, gamma, q);
            auto a = hv.eval(q.x, q.v), b = hp.eval(c.x, c.p), d = vp.eval(c.x, c.p);
            for (int qq = 0; qq < n; ++qq) {
                double rhs = 0.0;
                for (int s = 0; s < n; ++s) rhs += A(qq, s) * d[static_cast<std::size_t>(s)];
                CHECK(oracle::close_rel(a[static_cast<std::size_t>(qq)] - b[static_cast<std::size_t>(qq)], rhs, 1e-9, 1e-9));
            }
        }
    }
}

TEST_CASE("concordance residual examples") {
    int n = 2;
    TangentState q{Vec(2), Vec(2)};
    q.x << 0.3, -0.5;
    q.v << 1.2, 0.4;
    auto E = oracle::lagrangian(n, oracle::euclidean_text(n));
    CHECK(max_abs(concordance_residual(*E, ExtendedConnection::flat(n), q)) == 0.0);

    // L = (a1(x) v1^2 + a2(x) v2^2)/2 with a1 = exp(x1), a2 = 1 + x1^2.
    auto W = oracle::lagrangian(n, "0.5*(exp(x1)*v1^2 + (1 + x1^2)*v2^2)");
    Mat A = concordance_residual(*W, ExtendedConnection::flat(n), q);
    CHECK(A(0, 0) == doctest::Approx(std::exp(q.x[0]) * q.v[0]));
    CHECK(A(0, 1) == doctest::Approx(2 * q.x[0] * q.v[1]));
    CHECK(A(1, 0) == 0.0);
    CHECK(A(1, 1) == 0.0);

    // Conformally flat metric exp(2 x1) delta with its Levi-Civita connection is concordant.
    auto C = oracle::lagrangian(n, "0.5*exp(2*x1)*(v1^2 + v2^2)");
    auto lc = ExtendedConnection::parse(n, {"1", "0", "0", "-1", "0", "1", "1", "0"});
    Rng rng(15);
    for (int t = 0; t < 10; ++t) {
        TangentState r{random_vec(rng, n, -1, 1), random_vec(rng, n, -2, 2)};
        CHECK(max_abs(concordance_residual(*C, lc, r)) < 1e-12);
        // with a concordant connection the horizontal gradients agree through lambda
        auto Xp = sample_scalar(n);
        auto a = horizontal_gradient(to_velocity(Xp, *C), lc, C.get()).eval(r.x, r.v);
        auto c = legendre(*C, r);
        auto b = horizontal_gradient(Xp, lc).eval(c.x, c.p);
        for (int i = 0; i < n; ++i) CHECK(oracle::close_rel(a[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(i)], 1e-10, 1e-8));
    }
}

TEST_CASE("momentum concordance form matches the velocity form through lambda") {
    // B(q, s) = nabla_q dH/dp_s relates to A(q, k) = nabla_q dL/dv^k by B = -A g^-1.
    Rng rng(16);
    for (int n : {2, 3}) {
        auto L = oracle::lagrangian(n, oracle::quartic_text(n) + " + 0.2*(2 + x1)*v" + std::to_string(n) + "^2");
        auto H = HamiltonianModel::from_lagrangian(L);
        auto gamma = random_connection(rng, n);
        for (int trial = 0; trial < 10; ++trial) {
            TangentState q{random_vec(rng, n, -1, 1), rng.vector_with_norm_in(n, 0.4, 1.5)};
            auto c = legendre(*L, q);
            Mat A = concordance_residual(*L, gamma, q);
            Mat B = concordance_residual_momentum(H, gamma, c);
            Mat expect = -A * vertical_metrics(*L, q).g_inv;
            CHECK(max_abs(B - expect) <= 1e-8 * std::max(1.0, max_abs(B)));
        }
    }
}

TEST_CASE("projector properties") {
    auto E = HamiltonianModel::from_lagrangian(oracle::lagrangian(2, oracle::euclidean_text(2)));
    CotangentState c{Vec::Zero(2), Vec(2)};
    c.p << 0.0, 1.0;
    Mat P = projector(E, c).P;
    CHECK(P(0, 0) == doctest::Approx(1.0));
    CHECK(P(0, 1) == doctest::Approx(0.0));
    CHECK(P(1, 0) == doctest::Approx(0.0));
    CHECK(P(1, 1) == doctest::Approx(0.0));

    Rng rng(17);
    for (int n : {2, 3, 4}) {
        auto Hq = HamiltonianModel::from_lagrangian(oracle::lagrangian(n, oracle::quartic_text(n)));
        auto He = HamiltonianModel::from_lagrangian(oracle::lagrangian(n, oracle::potential_text(n)));
        for (int t = 0; t < 100; ++t) {
            CotangentState s{random_vec(rng, n, -1, 1), rng.vector_with_norm_in(n, 0.1, 5.0)};
            Mat Pe = projector(He, s).P;
            CHECK(max_abs(Pe * Pe - Pe) <= 1e-10);
            CHECK(max_abs(Pe.transpose() * s.p) <= 1e-10 * s.p.norm());
            if (t % 10 == 0) {
                auto pr = projector(Hq, s);
                CHECK(pr.P.trace() == doctest::Approx(n - 1).epsilon(1e-9));
                CHECK(max_abs(pr.apply_to_covector(s.p)) <= 1e-10 * s.p.norm());
                CHECK(max_abs(pr.P * pr.P - pr.P) <= 1e-10);
                Eigen::FullPivLU<Mat> lu(pr.P);
                lu.setThreshold(1e-9);
                CHECK(lu.rank() == n - 1);
            }
        }
    }
    CotangentState zero{Vec::Zero(2), Vec::Zero(2)};
    CHECK_THROWS_AS(projector(E, zero), ZeroMomentum);
    auto odd = HamiltonianModel::from_expression(2, parse_expression("x1 + x2", SymbolScope::over_momentum(2)));
    CHECK_THROWS_AS(projector(odd, c), DegenerateOmega);
}

TEST_CASE("curvature of flat and constant connections") {
    Rng rng(18);
    int n = 3;
    CotangentState c{random_vec(rng, n, -1, 1), random_vec(rng, n, -1, 1)};
    auto flat = curvature_tensors(ExtendedConnection::flat(n), c);
    for (double d : flat.D.data()) CHECK(d == 0.0);
    for (double r : flat.R.data()) CHECK(r == 0.0);

    auto gamma = constant_connection(rng, n);
    auto jet = gamma.eval(c, 0);
    auto cp = curvature_tensors(gamma, c);
    for (double d : cp.D.data()) CHECK(d == 0.0);
    for (int k = 0; k < n; ++k)
        for (int r = 0; r < n; ++r)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    double expect = 0.0;
                    for (int m = 0; m < n; ++m)
                        expect += jet.G(k, i, m) * jet.G(m, j, r) - jet.G(k, j, m) * jet.G(m, i, r);
                    CHECK(cp.R(k, r, i, j) == doctest::Approx(expect).epsilon(1e-14));
                }
}

TEST_CASE("curvature of polynomial connections matches differenced coefficients") {
    Rng rng(19);
    for (int n : {2, 3}) {
        auto gamma = random_connection(rng, n);
        CotangentState c{random_vec(rng, n, -1, 1), random_vec(rng, n, -1, 1)};
        auto cp = curvature_tensors(gamma, c);
        auto G = [&](const Vec& x, const Vec& p, int k, int i, int j) { return gamma.eval({x, p}, 0).G(k, i, j); };
        const double h = 1e-5;
        auto dx = [&](int k, int i, int j, int m) {
            Vec a = c.x, b = c.x;
            a[m] += h;
            b[m] -= h;
            return (G(a, c.p, k, i, j) - G(b, c.p, k, i, j)) / (2 * h);
        };
        auto dp = [&](int k, int i, int j, int m) {
            Vec a = c.p, b = c.p;
            a[m] += h;
            b[m] -= h;
            return (G(c.x, a, k, i, j) - G(c.x, b, k, i, j)) / (2 * h);
        };
        auto G0 = gamma.eval(c, 0).G;
        auto hor = [&](int k, int j, int r, int i) {
            double v = dx(k, j, r, i);
            for (int m = 0; m < n; ++m)
                for (int a = 0; a < n; ++a) v += c.p[a] * G0(a, m, i) * dp(k, j, r, m);
            return v;
        };
        for (int k = 0; k < n; ++k)
            for (int r = 0; r < n; ++r)
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) {
                        CHECK(std::abs(cp.D(k, r, i, j) + dp(k, i, j, r)) <= 1e-7);
                        double R = hor(k, j, r, i) - hor(k, i, r, j);
                        for (int m = 0; m < n; ++m) R += G0(k, i, m) * G0(m, j, r) - G0(k, j, m) * G0(m, i, r);
                        CHECK(std::abs(cp.R(k, r, i, j) - R) <= 1e-7);
                    }
    }
}

TEST_CASE("commutator identities") {
    Rng rng(20);
    for (int n : {2, 3}) {
        auto H = euclid_sine_h(n);
        CotangentState c{random_vec(rng, n, -1, 1), random_vec(rng, n, -1, 1)};
        auto flat = commutator_residual(H, ExtendedConnection::flat(n), c);
        CHECK(max_abs(flat.horizontal) == 0.0);
        CHECK(max_abs(flat.mixed) == 0.0);

        double worst_printed = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            auto gamma = random_connection(rng, n);
            CotangentState s{random_vec(rng, n, -1, 1), rng.vector_with_norm_in(n, 0.3, 2.0)};
            auto res = commutator_residual(H, gamma, s);
            CHECK(max_abs(res.horizontal) <= 1e-8);
            CHECK(max_abs(res.mixed) <= 1e-8);
            worst_printed = std::max(worst_printed, max_abs(res.horizontal_as_printed));

            // linear in H
            Expr scaled = Expr(3.5) * *H.expression();
            auto H3 = HamiltonianModel::from_expression(n, scaled);
            auto res3 = commutator_residual(H3, gamma, s);
            CHECK(max_abs(res3.horizontal) <= 1e-8);
            CHECK(max_abs(res3.mixed) <= 1e-8);
        }
        // The opposite curvature sign leaves a residual of order one.
        CHECK(worst_printed > 1e-3);
    }
    auto derived = HamiltonianModel::from_lagrangian(oracle::lagrangian(2, oracle::euclidean_text(2)));
    CotangentState c{Vec::Zero(2), Vec::Ones(2)};
    CHECK_THROWS_AS(commutator_residual(derived, ExtendedConnection::flat(2), c), ValidationError);
}

TEST_CASE("connection shift adds componentwise") {
    int n = 2;
    auto gamma = ExtendedConnection::parse(n, {"x1", "p2", "p2", "0", "1", "0", "0", "x2*p1"});
    auto t = ConnectionShift::parse(n, {"1", "0", "0", "p1", "0", "0", "0", "0"});
    auto s = shifted(gamma, t);
    Vec x(2), p(2);
    x << 0.5, 2.0;
    p << 3.0, -1.0;
    auto G = s.eval({x, p}, 0).G;
    CHECK(G(0, 0, 0) == doctest::Approx(1.5));
    CHECK(G(0, 1, 0) == doctest::Approx(-1.0));
    CHECK(G(0, 1, 1) == doctest::Approx(3.0));
    CHECK(G(1, 1, 1) == doctest::Approx(6.0));
}

TEST_CASE("covariant time derivative") {
    int n = 2;
    auto flat = ExtendedConnection::flat(n);
    const int N = 11;
    const double h = 0.1;
    std::vector<CotangentState> lift;
    for (int k = 0; k < N; ++k) {
        double t = k * h;
        Vec x(2), p(2);
        x << std::sin(t), t * t;
        p << 1.0 + t, std::cos(t);
        lift.push_back({x, p});
    }
    TensorSeries constant{n, 0, 1, h, std::vector<std::vector<double>>(N, {2.0, -1.0})};
    auto d0 = covariant_time_derivative(constant, lift, flat);
    for (const auto& v : d0.values) {
        CHECK(v[0] == 0.0);
        CHECK(v[1] == 0.0);
    }
    TensorSeries linear{n, 1, 0, h, {}};
    for (int k = 0; k < N; ++k) linear.values.push_back({3.0 * k * h, -0.5 * k * h + 1.0});
    auto d1 = covariant_time_derivative(linear, lift, flat);
    for (int k = 0; k < N; ++k) {
        CHECK(d1.values[static_cast<std::size_t>(k)][0] == doctest::Approx(3.0));
        CHECK(d1.values[static_cast<std::size_t>(k)][1] == doctest::Approx(-0.5));
    }
    TensorSeries short_series{n, 0, 0, h, {{1.0}, {2.0}}};
    CHECK_THROWS_AS(covariant_time_derivative(short_series, std::vector<CotangentState>(lift.begin(), lift.begin() + 2), flat),
                    InsufficientSamples);
}

TEST_CASE("covariant time derivative follows the composite chain rule") {
    // nabla_t X = sum nabla_k X xdot^k + sum d/dp_k X nabla_t p_k, with
    // nabla_t p_k = pdot_k - xdot^m Gamma^b_mk p_b.
    Rng rng(21);
    int n = 2;
    auto gamma = random_connection(rng, n);
    auto Xf = sample_covector(n);
    auto hor = horizontal_gradient(Xf, gamma); // [s][k]
    auto ver = vertical_gradient(Xf);          // [k][s]
    auto curve = [](double t) {
        Vec x(2), p(2), xd(2), pd(2);
        x << 0.3 * std::sin(t), 0.2 + 0.5 * t * t;
        xd << 0.3 * std::cos(t), t;
        p << 1.0 + 0.5 * t, std::cos(2 * t);
        pd << 0.5, -2.0 * std::sin(2 * t);
        return std::array<Vec, 4>{x, p, xd, pd};
    };
    auto max_error = [&](double h) {
        const int N = static_cast<int>(std::lround(1.0 / h)) + 1;
        TensorSeries s{n, 0, 1, h, {}};
        std::vector<CotangentState> lift;
        for (int k = 0; k < N; ++k) {
            auto c = curve(k * h);
            lift.push_back({c[0], c[1]});
            s.values.push_back(Xf.eval(c[0], c[1]));
        }
        auto d = covariant_time_derivative(s, lift, gamma);
        double err = 0.0;
        for (int k = 1; k < N - 1; ++k) {
            auto c = curve(k * h);
            auto G = gamma.eval({c[0], c[1]}, 0).G;
            auto hv = hor.eval(c[0], c[1]);
            auto vv = ver.eval(c[0], c[1]);
            for (int sidx = 0; sidx < n; ++sidx) {
                double expect = 0.0;
                for (int kk = 0; kk < n; ++kk) {
                    double ntp = c[3][kk];
                    for (int m = 0; m < n; ++m)
                        for (int b = 0; b < n; ++b) ntp -= c[2][m] * G(b, m, kk) * c[1][b];
                    expect += hv[static_cast<std::size_t>(sidx * n + kk)] * c[2][kk] +
                              vv[static_cast<std::size_t>(kk * n + sidx)] * ntp;
                }
                err = std::max(err, std::abs(d.values[static_cast<std::size_t>(k)][static_cast<std::size_t>(sidx)] - expect));
            }
        }
        return err;
    };
    double e1 = max_error(0.01), e2 = max_error(0.005);
    CHECK(e1 < 1e-3);
    CHECK(e2 < e1 / 3.5); // second order
    CHECK(e2 < 1e-4);
}
