#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "degschro/arrow_matrix.hpp"
#include "degschro/core_model.hpp"
#include "degschro/diffusive_damping.hpp"
#include "json.hpp"

namespace degschro {

/// Nodes x_i = (i/N)^g, i = 1..N (no node at the degenerate end), and cell widths
/// h_1 = (x_1 + x_2)/2, h_i = (x_{i+1} - x_{i-1})/2, h_N = (x_N - x_{N-1})/2.
struct XGrid {
    std::vector<double> nodes;
    std::vector<double> widths;
    double grade = 1.0;

    std::size_t size() const noexcept { return nodes.size(); }
};

XGrid build_x_grid(std::size_t n, double g = 1.0);

/// 2 when the coefficient is at least linearly degenerate (alpha >= 1 or m_kappa >= 1), else 1.
double default_grade(const ProblemSpec& spec);

struct AssembleOptions {
    /// false drops the boundary damping (zeta -> 0): the psi modes still see y but the
    /// boundary flux vanishes and the psi part carries no energy.
    bool damped = true;
};

/// Discrete generator A_h with its weighted inner product. Immutable.
class SystemOperator {
public:
    SystemOperator(ProblemSpec spec, XGrid xgrid, XiGrid xigrid, ArrowMatrix a, bool damped);

    const ProblemSpec& problem() const noexcept { return spec_; }
    const XGrid& xgrid() const noexcept { return xgrid_; }
    const XiGrid& xigrid() const noexcept { return xigrid_; }
    const ArrowMatrix& matrix() const noexcept { return a_; }
    const HilbertWeights& weights() const noexcept { return weights_; }
    bool damped() const noexcept { return damped_; }
    /// zeta for a damped operator, 0 otherwise.
    double effective_zeta() const noexcept { return damped_ ? spec_.zeta() : 0.0; }
    std::size_t boundary_index() const noexcept { return a_.boundary; }
    std::size_t nx() const noexcept { return xgrid_.size(); }
    std::size_t nxi() const noexcept { return xigrid_.size(); }
    std::size_t dimension() const noexcept { return nx() + nxi(); }

    /// Square roots of the inner-product weights (psi weights fall back to sqrt(w_k)
    /// for an undamped operator).
    const std::vector<double>& scale_y() const noexcept { return sy_; }
    const std::vector<double>& scale_psi() const noexcept { return sp_; }

    /// S A S^{-1}: the same operator in coordinates where the H inner product is Euclidean.
    const ArrowMatrix& scaled_matrix() const noexcept { return scaled_; }
    StateVector to_scaled(const StateVector& s) const;
    StateVector from_scaled(const StateVector& s) const;

private:
    ProblemSpec spec_;
    XGrid xgrid_;
    XiGrid xigrid_;
    ArrowMatrix a_;
    bool damped_;
    HilbertWeights weights_;
    std::vector<double> sy_, sp_;
    ArrowMatrix scaled_;
};

/// Finite-volume flux form of i (kappa y_x)_x with fluxes kappa(x_{i+1/2}) (y_{i+1} - y_i)/(x_{i+1} - x_i).
/// P: flux(1) = 0, flux(0) = -i zeta sum w eta psi, coupled through the first cell.
/// P': flux(1) = +i zeta sum w eta psi through the last cell; at 0 a ghost value y(0) = 0
/// when m_kappa < 1, zero flux otherwise. psi rows: psi_k' = -xi_k^2 psi_k + eta_k y_b.
SystemOperator assemble_operator(const ProblemSpec& spec, const XGrid& xgrid, const XiGrid& xigrid,
                                 AssembleOptions options = {});

StateVector apply_operator(const SystemOperator& op, const StateVector& state);

/// 1/2 sum h_i |y_i|^2 + zeta/2 sum w_k |psi_k|^2.
double energy(const StateVector& state, const SystemOperator& op);

/// -zeta sum_k w_k xi_k^2 |psi_k|^2 (zero for an undamped operator).
double dissipation(const SystemOperator& op, const StateVector& state);

/// zeta sum_k w_k eta_k psi_k, the damping flux magnitude at the boundary.
cplx boundary_flux(const SystemOperator& op, const StateVector& state);

/// Coordinate list, one nonzero per line: "row col re im" (0-based, y then psi ordering).
std::string export_coo(const SystemOperator& op);
nlohmann::json operator_metadata(const SystemOperator& op);

} // namespace degschro
