#pragma once

/// \file calculus.hpp
/// Lagrangian and Hamiltonian models, Legendre maps, Omega and the
/// vertical metrics g_ij = d2L/dv dv and g^ij = d2H/dp dp.
///
/// Matrix conventions for mixed partials: Lvx(i, j) = d2L/dv^i dx^j and
/// Hpx(i, j) = d2H/dp_i dx^j.

#include "nslab/expression.hpp"
#include "nslab/linalg.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>

namespace nslab {

struct TangentState {
    Vec x;
    Vec v;
};

struct CotangentState {
    Vec x;
    Vec p;
};

/// Partials of L at one tangent point. Orders above the requested one are left empty.
struct LagrangeJet {
    double L = 0.0;
    Vec Lx, Lv;
    Mat Lvv, Lvx, Lxx;
    Tensor3 Lvvv; ///< (i, j, k) = d3L / dv^i dv^j dv^k
    Tensor3 Lvvx; ///< (i, j, k) = d3L / dv^i dv^j dx^k
    Tensor3 Lvxx; ///< (i, j, k) = d3L / dv^i dx^j dx^k
};

class LagrangianModel {
public:
    LagrangianModel(int n, Expr lagrangian);
    static LagrangianModel parse(int n, std::string_view text);

    int dim() const { return n_; }
    const Expr& expr() const { return L_; }

    /// Symbolic partials.
    const Expr& dv(int i) const { return Lv_[static_cast<std::size_t>(i)]; }
    const Expr& dx(int i) const { return Lx_[static_cast<std::size_t>(i)]; }
    const Expr& dvdv(int i, int j) const { return Lvv_[idx(i, j)]; }
    const Expr& dvdx(int i, int j) const { return Lvx_[idx(i, j)]; }

    /// True when every third velocity derivative folds to the constant 0.
    bool quadratic_in_velocity() const { return quadratic_; }

    double value(const TangentState& q) const;
    LagrangeJet jet(const TangentState& q, int order) const;

private:
    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i * n_ + j); }

    int n_;
    Expr L_;
    std::vector<Expr> Lx_, Lv_, Lvv_, Lvx_, Lxx_;
    bool quadratic_ = false;
    CompiledBatch order1_; // L, Lx, Lv
    CompiledBatch order2_; // Lvv, Lvx, Lxx
    CompiledBatch order3_; // Lvvv, Lvvx, Lvxx
};

/// Omega = sum_i v^i dL/dv^i.
double omega_v(const LagrangianModel& L, const TangentState& q);

/// p_i = dL/dv^i.
CotangentState legendre(const LagrangianModel& L, const TangentState& q);

struct InverseLegendreResult {
    TangentState q;
    int iterations = 0;    ///< Newton iterations after the initial guess
    double residual = 0.0; ///< max-norm of dL/dv(x, v) - p
};

/// Newton iteration on dL/dv(x, v) = p with Jacobian g, halving the step while
/// the residual grows. Starting point: g^{-1} p when L is quadratic in v;
/// otherwise p rescaled along its ray so that <p, dL/dv(x, s p)> = |p|^2,
/// falling back to p itself. Tolerance 1e-12, at most 50 iterations.
InverseLegendreResult inverse_legendre(const LagrangianModel& L, const CotangentState& c,
                                       const std::optional<Vec>& guess = std::nullopt);

struct VerticalMetric {
    Mat g;
    Mat g_inv;
};

VerticalMetric vertical_metrics(const LagrangianModel& L, const TangentState& q);

/// u^i = v^i / Omega.
Vec mu_map(const LagrangianModel& L, const TangentState& q);

/// Partials of H at one cotangent point. Hp is the paired velocity.
struct HamiltonJet {
    double H = 0.0;
    Vec Hx, Hp;
    Mat Hpp, Hpx, Hxx;
};

class HamiltonianModel {
public:
    enum class Source { DerivedFromLagrangian, Expression };

    static HamiltonianModel from_lagrangian(std::shared_ptr<const LagrangianModel> L);
    /// `backing` is optional and only used by velocity-representation code.
    static HamiltonianModel from_expression(int n, Expr H, std::shared_ptr<const LagrangianModel> backing = {});

    int dim() const { return n_; }
    Source source() const { return source_; }
    const LagrangianModel* lagrangian() const { return L_.get(); }
    std::shared_ptr<const LagrangianModel> lagrangian_ptr() const { return L_; }
    /// The symbolic H, when the model has one.
    const Expr* expression() const { return H_ ? &*H_ : nullptr; }

    /// order 0: H; 1: adds Hx, Hp; 2: adds Hpp, Hpx, Hxx.
    HamiltonJet eval(const CotangentState& c, int order) const;

private:
    HamiltonianModel() = default;

    int n_ = 0;
    Source source_ = Source::Expression;
    std::shared_ptr<const LagrangianModel> L_;
    std::optional<Expr> H_;
    std::vector<Expr> partials1_, partials2_;
    CompiledBatch order0_, order1_, order2_;
};

inline HamiltonJet hamiltonian_eval(const HamiltonianModel& H, const CotangentState& c, int order) {
    return H.eval(c, order);
}

/// Omega = sum_i p_i dH/dp_i.
double omega_p(const HamiltonianModel& H, const CotangentState& c);

struct RegularitySample {
    Vec x_lo, x_hi;      ///< base box
    Vec v_lo, v_hi;      ///< velocity box
    double v_min_norm = 1e-3; ///< samples with |v| below this are redrawn
    int count = 200;
    std::uint64_t seed = 1;
};

struct RegularityReport {
    double min_omega = 0.0;
    double min_abs_det_g = 0.0;
    double max_roundtrip_error = 0.0;
    int samples = 0;
    bool omega_positive = false;
    bool metric_nondegenerate = false;
    bool roundtrip_ok = false;
    bool pass = false;
};

RegularityReport check_regularity(const LagrangianModel& L, const RegularitySample& sample);

} // namespace nslab
