#pragma once

/// \file tensorfields.hpp
/// Extended tensor fields over (x, p) or (x, v), extended connections and
/// the derivatives built from them.
///
/// Index layout:
///  - field components are flattened row-major with all upper indices
///    first, then all lower indices;
///  - a gradient appends its new index last among the indices of its kind
///    (momentum gradient: new upper index; velocity and horizontal gradients:
///    new lower index);
///  - connection coefficients Gamma^k_ij are stored [k][i][j];
///  - P^r_s is stored as the matrix P(r, s);
///  - D^{kr}_{ij} is stored [k][r][i][j], R^k_{rij} is stored [k][r][i][j].

#include "nslab/calculus.hpp"
#include "nslab/expression.hpp"
#include "nslab/linalg.hpp"

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace nslab {

enum class Representation { Momentum, Velocity };

const char* to_string(Representation r);

class ExtendedTensorField {
public:
    /// Components as expressions over (x, fiber). `components` holds
    /// n^(upper+lower) entries in the documented layout.
    ExtendedTensorField(int n, int upper, int lower, Representation rep, std::vector<Expr> components);

    static ExtendedTensorField scalar(int n, Representation rep, Expr value);

    int dim() const { return n_; }
    int upper() const { return upper_; }
    int lower() const { return lower_; }
    Representation representation() const { return rep_; }
    std::size_t size() const { return comps_.size(); }

    const Expr& component(std::span<const int> indices) const;
    const std::vector<Expr>& components() const { return comps_; }

    /// Evaluate every component at one point of the bundle.
    std::vector<double> eval(const Vec& x, const Vec& fiber) const;

private:
    int n_, upper_, lower_;
    Representation rep_;
    std::vector<Expr> comps_;
    CompiledBatch compiled_;
};

/// Symmetric Gamma^k_ij over (x, p).
class ExtendedConnection {
public:
    /// Entries are read as [k][i][j]. Symmetry is enforced: only i <= j is
    /// used and a differing (k, j, i) entry is rejected.
    ExtendedConnection(int n, std::vector<Expr> gamma);

    static ExtendedConnection flat(int n);
    /// n^3 expression texts over (x, p) in [k][i][j] order.
    static ExtendedConnection parse(int n, const std::vector<std::string>& texts);

    int dim() const { return n_; }
    const Expr& operator()(int k, int i, int j) const { return g_[idx(k, i, j)]; }
    const std::vector<Expr>& coefficients() const { return g_; }
    bool is_flat() const { return flat_; }

    /// Gamma composed with the Legendre map: p_i replaced by dL/dv^i.
    std::vector<Expr> in_velocity_representation(const LagrangianModel& L) const;

    struct Jet {
        Tensor3 G;    ///< Gamma^k_ij
        Tensor4 dGdx; ///< (k, i, j, m) = d Gamma^k_ij / dx^m
        Tensor4 dGdp; ///< (k, i, j, m) = d Gamma^k_ij / dp_m
    };
    /// order 0: G only; order 1: adds both first-derivative arrays.
    Jet eval(const CotangentState& c, int order = 1) const;

private:
    std::size_t idx(int k, int i, int j) const { return static_cast<std::size_t>((k * n_ + i) * n_ + j); }
    int n_;
    std::vector<Expr> g_;
    bool flat_ = true;
    CompiledBatch order0_, order1_;
};

/// Symmetric (1,2) field T^k_ij used for Gamma -> Gamma + T.
class ConnectionShift {
public:
    ConnectionShift(int n, std::vector<Expr> t);
    static ConnectionShift parse(int n, const std::vector<std::string>& texts);
    int dim() const { return n_; }
    const std::vector<Expr>& components() const { return t_; }

private:
    int n_;
    std::vector<Expr> t_;
};

ExtendedConnection shifted(const ExtendedConnection& gamma, const ConnectionShift& t);

/// Fiber derivative: d/dp_q (momentum) or d/dv^q (velocity).
ExtendedTensorField vertical_gradient(const ExtendedTensorField& f);

/// Horizontal gradient with respect to `gamma`. Velocity-representation
/// fields need `L` to compose gamma with the Legendre map.
ExtendedTensorField horizontal_gradient(const ExtendedTensorField& f, const ExtendedConnection& gamma,
                                        const LagrangianModel* L = nullptr);

/// Momentum to velocity: exact substitution p = dL/dv.
ExtendedTensorField to_velocity(const ExtendedTensorField& f, const LagrangianModel& L);

/// A field composed with the inverse Legendre map; only point evaluation
/// is available since the inverse has no closed form.
class ComposedField {
public:
    ComposedField(ExtendedTensorField source, std::shared_ptr<const LagrangianModel> L);
    const ExtendedTensorField& source() const { return source_; }
    std::vector<double> eval(const Vec& x, const Vec& p) const;

private:
    ExtendedTensorField source_;
    std::shared_ptr<const LagrangianModel> L_;
};

/// Velocity to momentum by composition with the inverse Legendre map.
ComposedField to_momentum(const ExtendedTensorField& f, std::shared_ptr<const LagrangianModel> L);

struct Projector {
    Mat P; ///< P(r, s) = P^r_s

    Vec apply(const Vec& X) const { return P * X; }
    /// (P* w)_s = sum_r w_r P^r_s
    Vec apply_to_covector(const Vec& w) const { return P.transpose() * w; }
};

/// P^r_s = delta^r_s - p_s dH/dp_r / Omega.
Projector projector(const HamiltonianModel& H, const CotangentState& c);
Projector projector(const HamiltonJet& h, const Vec& p);

struct CurvaturePair {
    Tensor4 D; ///< [k][r][i][j] = -d Gamma^k_ij / dp_r
    Tensor4 R; ///< [k][r][i][j] = R^k_{rij}
};

CurvaturePair curvature_tensors(const ExtendedConnection& gamma, const CotangentState& c);
CurvaturePair curvature_tensors(const ExtendedConnection::Jet& jet, const Vec& p);

struct CommutatorResidual {
    Mat horizontal; ///< (i, j): [nabla_i, nabla_j] H - sum p_k R^k_{sij} dH/dp_s
    Mat mixed;      ///< (i, j): [nabla_i, d/dp_j] H - sum p_k D^{kj}_{is} dH/dp_s
    Mat horizontal_as_printed; ///< same commutator with the opposite curvature sign
};

/// Requires an expression Hamiltonian.
CommutatorResidual commutator_residual(const HamiltonianModel& H, const ExtendedConnection& gamma,
                                       const CotangentState& c);

/// (q, s) = nabla_q of dL/dv^s in the velocity representation.
Mat concordance_residual(const LagrangianModel& L, const ExtendedConnection& gamma, const TangentState& q);

/// (q, s) = nabla_q of dH/dp_s in the momentum representation.
Mat concordance_residual_momentum(const HamiltonianModel& H, const ExtendedConnection& gamma,
                                  const CotangentState& c);

/// Uniformly sampled tensor values along a curve.
struct TensorSeries {
    int n = 0;
    int upper = 0;
    int lower = 0;
    double h = 0.0;
    std::vector<std::vector<double>> values;
};

/// d/dt by central differences (one-sided second order at the ends) plus
/// the connection terms along the momentum lift.
TensorSeries covariant_time_derivative(const TensorSeries& series, const std::vector<CotangentState>& lift,
                                       const ExtendedConnection& gamma);

/// Same along a velocity lift; gamma is evaluated at the Legendre image.
TensorSeries covariant_time_derivative(const TensorSeries& series, const std::vector<TangentState>& lift,
                                       const ExtendedConnection& gamma, const LagrangianModel& L);

} // namespace nslab
