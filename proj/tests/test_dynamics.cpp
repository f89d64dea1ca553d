#include "nslab/dynamics.hpp"
#include "nslab/errors.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace nslab;

namespace {

NewtonianSystem make_system(int n, const std::string& lagrangian, const std::vector<std::string>& q = {}) {
    auto L = oracle::lagrangian(n, lagrangian);
    auto H = HamiltonianModel::from_lagrangian(L);
    ForceField Q = q.empty() ? ForceField::zero(n) : ForceField::parse(n, q);
    return NewtonianSystem(H, Q);
}

std::vector<std::string> scaled_momentum(int n, const std::string& c) {
    std::vector<std::string> q;
    for (int i = 1; i <= n; ++i) q.push_back(c + "*p" + std::to_string(i));
    return q;
}

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

/// sup over the grid of |lambda(v-trajectory) - p-trajectory| in x and p.
double representation_gap(const NewtonianSystem& sys, const TangentState& q0, double t_end, double h) {
    const auto& L = *sys.lagrangian();
    auto tv = integrate(sys, q0, t_end, h);
    auto tp = integrate(sys, legendre(L, q0), t_end, h);
    double gap = 0.0;
    for (std::size_t k = 0; k < tv.size(); ++k) {
        auto c = legendre(L, tv.tangent(k));
        gap = std::max(gap, max_abs(c.x - tp.x[k]));
        gap = std::max(gap, max_abs(c.p - tp.fiber[k]));
    }
    return gap;
}

} // namespace

TEST_CASE("momentum right-hand side examples") {
    auto E = make_system(2, oracle::euclidean_text(2));
    auto r = rhs_p(E, {vec2(5.0, -3.0), vec2(1.0, 0.0)});
    CHECK(r.dx[0] == doctest::Approx(1.0));
    CHECK(r.dx[1] == doctest::Approx(0.0));
    CHECK(r.dfiber[0] == 0.0);
    CHECK(r.dfiber[1] == 0.0);
    auto r2 = rhs_p(E, {vec2(0, 0), vec2(2.0, 0.0)});
    CHECK(r2.dx[0] == doctest::Approx(0.5));
    auto Eq = make_system(2, oracle::euclidean_text(2), scaled_momentum(2, "0.1"));
    auto r3 = rhs_p(Eq, {vec2(0, 0), vec2(1.0, 0.0)});
    CHECK(r3.dfiber[0] == doctest::Approx(0.1));
    CHECK(r3.dfiber[1] == doctest::Approx(0.0));
    CHECK_THROWS_AS(rhs_p(E, {vec2(0, 0), vec2(0, 0)}), DegenerateOmega);
}

TEST_CASE("velocity right-hand side examples") {
    auto E = make_system(2, oracle::euclidean_text(2));
    auto r = rhs_v(E, {vec2(0.2, 0.1), vec2(1.0, 0.0)});
    CHECK(r.dx[0] == doctest::Approx(1.0));
    CHECK(r.dx[1] == doctest::Approx(0.0));
    CHECK(r.dfiber[0] == doctest::Approx(0.0));
    CHECK(r.dfiber[1] == doctest::Approx(0.0));

    // L = |v|^2/2 - U: dv = -grad U / Omega
    auto U = make_system(2, oracle::potential_text(2));
    TangentState q{vec2(0.4, -0.3), vec2(0.7, 1.1)};
    auto rv = rhs_v(U, q);
    double omega = q.v.squaredNorm();
    double gu1 = 0.3 * std::cos(q.x[0]) + 0.2 * q.x[1];
    double gu2 = 0.2 * q.x[0] - 0.1 * std::sin(q.x[1]);
    CHECK(rv.dfiber[0] == doctest::Approx(-gu1 / omega));
    CHECK(rv.dfiber[1] == doctest::Approx(-gu2 / omega));

    auto Hexpr = HamiltonianModel::from_expression(2, parse_expression("0.5*(p1^2+p2^2)", SymbolScope::over_momentum(2)));
    NewtonianSystem bare(Hexpr, ForceField::zero(2));
    CHECK_THROWS_AS(rhs_v(bare, q), ValidationError);
}

TEST_CASE("velocity and momentum right-hand sides are Legendre-conjugate") {
    // dp/dt = g dv/dt + (d2L/dv dx) dx/dt along paired states
    Rng rng(31);
    std::vector<std::pair<std::string, std::vector<std::string>>> cases = {
        {oracle::quartic_text(3), scaled_momentum(3, "0.1")},
        {oracle::potential_text(3), {"sin(x2)*p1", "0.2*p3", "x1"}},
        {oracle::quartic_text(3) + " + 0.5*(1 + 0.3*x1^2)*v1^2", {"0", "p1*p2", "cos(x3)"}},
    };
    for (const auto& [text, q] : cases) {
        auto sys = make_system(3, text, q);
        const auto& L = *sys.lagrangian();
        for (int t = 0; t < 20; ++t) {
            TangentState s{rng.in_box(Vec::Constant(3, -1), Vec::Constant(3, 1)), rng.vector_with_norm_in(3, 0.3, 3.0)};
            auto rv = rhs_v(sys, s);
            auto rp = rhs_p(sys, legendre(L, s));
            auto lj = L.jet(s, 2);
            Vec dp = lj.Lvv * rv.dfiber + lj.Lvx * rv.dx;
            CHECK(max_abs(rv.dx - rp.dx) <= 1e-9 * std::max(1.0, max_abs(rp.dx)));
            CHECK(max_abs(dp - rp.dfiber) <= 1e-9 * std::max(1.0, max_abs(rp.dfiber)));
        }
    }
}

TEST_CASE("force from a prescribed acceleration reproduces it") {
    auto L = oracle::lagrangian(2, oracle::quartic_text(2) + " + 0.5*(1 + 0.3*x1^2)*v1^2");
    auto scope = SymbolScope::over_velocity(2);
    std::vector<Expr> a = {parse_expression("sin(x2) - 0.3*v1", scope), parse_expression("v1*v2*0.2", scope)};
    auto Q = ForceField::from_acceleration(L, a);
    CHECK(Q.velocity_authored());
    NewtonianSystem sys(HamiltonianModel::from_lagrangian(L), Q);
    Rng rng(32);
    for (int t = 0; t < 10; ++t) {
        TangentState s{rng.in_box(Vec::Constant(2, -1), Vec::Constant(2, 1)), rng.vector_with_norm_in(2, 0.4, 2.0)};
        Assignment at{{s.x.data(), 2}, {s.v.data(), 2}, {}, {}};
        auto rv = rhs_v(sys, s);
        CHECK(rv.dfiber[0] == doctest::Approx(a[0].eval(at)).epsilon(1e-9));
        CHECK(rv.dfiber[1] == doctest::Approx(a[1].eval(at)).epsilon(1e-9));

        // momentum-point partials by the chain rule agree with differences
        auto c = legendre(*L, s);
        auto jet = sys.force_at(c);
        auto comp = [&](int i, bool in_p) {
            return [&, i, in_p](const Vec& z) {
                CotangentState cc = c;
                (in_p ? cc.p : cc.x) = z;
                return sys.force_at(cc).Q[i];
            };
        };
        for (int i = 0; i < 2; ++i) {
            Vec gx = oracle::gradient(comp(i, false), c.x, 1e-5);
            Vec gp = oracle::gradient(comp(i, true), c.p, 1e-5);
            for (int r = 0; r < 2; ++r) {
                CHECK(oracle::close_rel(jet.dx(i, r), gx[r], 1e-6, 1e-7));
                CHECK(oracle::close_rel(jet.dp(i, r), gp[r], 1e-6, 1e-7));
            }
        }
    }
}

TEST_CASE("velocity-point force partials by the chain rule") {
    auto sys = make_system(2, oracle::quartic_text(2), {"x2*p1", "p1*p2"});
    const auto& L = *sys.lagrangian();
    TangentState s{vec2(0.3, -0.6), vec2(0.8, 0.5)};
    auto jv = sys.force().eval(s, L);
    for (int i = 0; i < 2; ++i) {
        auto fx = [&](const Vec& z) { return sys.force().eval(TangentState{z, s.v}, L).Q[i]; };
        auto fv = [&](const Vec& z) { return sys.force().eval(TangentState{s.x, z}, L).Q[i]; };
        Vec gx = oracle::gradient(fx, s.x, 1e-6), gv = oracle::gradient(fv, s.v, 1e-6);
        for (int r = 0; r < 2; ++r) {
            CHECK(oracle::close_rel(jv.dx(i, r), gx[r], 1e-7, 1e-9));
            CHECK(oracle::close_rel(jv.dv(i, r), gv[r], 1e-7, 1e-9));
        }
    }
}

TEST_CASE("straight lines, conservation and time reversal") {
    auto E = make_system(2, oracle::euclidean_text(2));
    auto tr = integrate(E, CotangentState{vec2(0, 0), vec2(1, 0)}, 1.0, 1e-3);
    CHECK(tr.size() == 1001);
    CHECK(std::abs(tr.x.back()[0] - 1.0) <= 1e-10);
    CHECK(std::abs(tr.x.back()[1]) <= 1e-10);
    CHECK(tr.t.back() == 1.0);

    Rng rng(33);
    for (int t = 0; t < 5; ++t) {
        CotangentState c{rng.in_box(Vec::Constant(2, -1), Vec::Constant(2, 1)), rng.vector_with_norm_in(2, 0.5, 2.0)};
        auto path = integrate(E, c, 1.0, 1e-3);
        double H0 = 0.5 * c.p.squaredNorm();
        for (const auto& p : path.fiber) CHECK(std::abs(0.5 * p.squaredNorm() - H0) <= 1e-10);
        // reverse: negate p and integrate back
        CotangentState end{path.x.back(), -path.fiber.back()};
        auto back = integrate(E, end, 1.0, 1e-3);
        CHECK(max_abs(back.x.back() - c.x) <= 1e-9);
        CHECK(max_abs(-back.fiber.back() - c.p) <= 1e-9);
    }

    // Q = 0 conserves H for a non-trivial model as well
    auto U = make_system(2, oracle::potential_text(2));
    CotangentState c{vec2(0.1, 0.2), vec2(0.9, -0.4)};
    auto path = integrate(U, c, 1.0, 1e-3);
    double H0 = U.hamiltonian().eval(c, 0).H;
    for (std::size_t k = 0; k < path.size(); ++k)
        CHECK(std::abs(U.hamiltonian().eval(path.cotangent(k), 0).H - H0) <= 1e-10);
}

TEST_CASE("trajectories agree across representations") {
    Rng rng(34);
    for (const std::string& model : {oracle::euclidean_text(2), oracle::quartic_text(2)}) {
        for (bool forced : {false, true}) {
            auto sys = make_system(2, model, forced ? scaled_momentum(2, "0.1") : std::vector<std::string>{});
            for (int t = 0; t < 3; ++t) {
                TangentState q{rng.in_box(Vec::Constant(2, -1), Vec::Constant(2, 1)), rng.vector_with_norm_in(2, 0.5, 2.0)};
                CHECK(representation_gap(sys, q, 1.0, 1e-3) <= 1e-6);
            }
        }
    }
}

TEST_CASE("RK4 endpoint error is fourth order") {
    auto sys = make_system(2, oracle::potential_text(2), {"0.1*p1 + 0.2*sin(x2)", "0.1*p2"});
    CotangentState c{vec2(0.2, -0.1), vec2(1.0, 0.5)};
    auto ref = integrate(sys, c, 1.0, 1.0 / 1600);
    auto err = [&](double h) {
        auto tr = integrate(sys, c, 1.0, h);
        return std::max(max_abs(tr.x.back() - ref.x.back()), max_abs(tr.fiber.back() - ref.fiber.back()));
    };
    double e1 = err(0.05), e2 = err(0.025);
    double ratio = e1 / e2;
    CHECK(ratio >= 12.0);
    CHECK(ratio <= 20.0);
}

TEST_CASE("integration is deterministic and reports failures with their time") {
    auto sys = make_system(2, oracle::quartic_text(2), scaled_momentum(2, "0.1"));
    CotangentState c{vec2(0.3, 0.1), vec2(0.7, -0.2)};
    auto a = integrate(sys, c, 0.5, 1e-3), b = integrate(sys, c, 0.5, 1e-3);
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK((a.x[k].array() == b.x[k].array()).all());
        CHECK((a.fiber[k].array() == b.fiber[k].array()).all());
    }
    auto E = make_system(2, oracle::euclidean_text(2));
    try {
        integrate(E, CotangentState{vec2(0, 0), vec2(0, 0)}, 1.0, 0.1);
        FAIL("expected a failure");
    } catch (const DegenerateOmega& e) {
        CHECK(std::string(e.what()).find("t=0") != std::string::npos);
    }
    CHECK_THROWS_AS(integrate(E, CotangentState{vec2(0, 0), vec2(1, 0)}, 1.0, 0.0), ValidationError);
    CHECK_THROWS_AS(integrate(E, CotangentState{vec2(0, 0), vec2(1, 0)}, -1.0, 0.1), ValidationError);
}

TEST_CASE("trajectory csv") {
    auto E = make_system(2, oracle::euclidean_text(2));
    auto tr = integrate(E, CotangentState{vec2(0, 0), vec2(1, 0)}, 0.5, 0.25);
    std::ostringstream os;
    tr.write_csv(os);
    std::string s = os.str();
    CHECK(s.substr(0, s.find('\n')) == "t,x1,x2,p1,p2");
    CHECK(std::count(s.begin(), s.end(), '\n') == 4);
    CHECK(s.find("0.5,0.5,0,1,0\n") != std::string::npos);
    auto tv = integrate(E, TangentState{vec2(0, 0), vec2(1, 0)}, 0.5, 0.25);
    std::ostringstream ov;
    tv.write_csv(ov);
    CHECK(ov.str().substr(0, 13) == "t,x1,x2,v1,v2");
}
