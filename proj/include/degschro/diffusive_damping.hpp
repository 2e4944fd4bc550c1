#pragma once

// Quadrature on the xi axis for the diffusive realization of the fractional
// integral with kernel t^{-beta} e^{-gamma t} / Gamma(1 - beta), and a direct
// convolution used to check it.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "degschro/core_model.hpp"

namespace degschro {

/// Positive half-axis nodes with weights already doubled, so that for an even
/// integrand f, sum_k w_k f(xi_k) approximates the integral over the whole real line.
struct XiGrid {
    std::vector<double> nodes;
    std::vector<double> weights;
    std::vector<double> eta;  // |xi|^{(2 beta - 1)/2}
    double beta = 0.5;
    double xi_min = 0.0;
    double xi_max = 0.0;

    std::size_t size() const noexcept { return nodes.size(); }
};

inline constexpr std::size_t kDefaultNxi = 200;
inline constexpr double kDefaultXiMin = 1e-4;
inline constexpr double kDefaultXiMax = 1e4;

/// Log-uniform nodes on [xi_min, xi_max], trapezoid weights in log space times the
/// Jacobian xi. The eta^2 mass of [0, xi_min] (xi_min^{2 beta} / (2 beta)) is lumped
/// into the first node so that long-time kernel tails are not lost.
XiGrid build_xi_quadrature(double beta, std::size_t n_xi = kDefaultNxi, double xi_min = kDefaultXiMin,
                           double xi_max = kDefaultXiMax);

/// zeta sum_k w_k eta_k^2 exp(-xi_k^2 tau) exp(-gamma tau), zeta = rho sin(beta pi) / pi.
double kernel_value(const XiGrid& grid, double tau, double rho, double gamma = 0.0);

/// rho tau^{-beta} e^{-gamma tau} / Gamma(1 - beta).
double exact_kernel(double beta, double tau, double rho, double gamma = 0.0);

/// Range of tau on which the truncated grid is expected to reproduce the kernel:
/// [10 / xi_max^2, 1e-4 / xi_min^2].
struct TauWindow {
    double lo;
    double hi;
};
TauWindow resolved_tau_window(const XiGrid& grid);

struct KernelCheck {
    std::vector<double> tau;
    std::vector<double> quadrature_value;
    std::vector<double> exact_value;
    std::vector<double> rel_error;
    std::vector<bool> resolved;
    double max_rel_error = 0.0;  // over resolved rows only
};

KernelCheck check_kernel(const XiGrid& grid, std::span<const double> taus, double rho, double gamma = 0.0);

/// CSV with header tau,quadrature,exact,rel_error.
std::string kernel_check_csv(const KernelCheck& check);

/// d^{beta,gamma} w at each t_n: the convolution of w with the kernel above, w taken
/// piecewise constant (midpoint value) on each step and the singular kernel integrated
/// exactly over each step. t_grid must be uniform; integration starts at t_grid[0].
CVector direct_fractional_integral(std::span<const cplx> w, std::span<const double> t_grid, double beta,
                                   double gamma = 0.0);
std::vector<double> direct_fractional_integral(std::span<const double> w, std::span<const double> t_grid,
                                               double beta, double gamma = 0.0);

struct ForcedPsi {
    std::vector<CVector> psi;  // psi[n] at t = n dt; empty unless history was requested
    CVector final_psi;
    CVector flux;              // zeta sum_k w_k eta_k psi_k(t_n)
};

/// psi_t + xi^2 psi = eta s(t), psi(0) = 0, with s sampled at t_n = n dt. Each mode is
/// advanced exactly for the step-wise constant forcing (s_n + s_{n+1}) / 2.
ForcedPsi evolve_psi_forced(const XiGrid& grid, std::span<const cplx> signal, double dt, double rho,
                            bool keep_history = false);

/// -i zeta sum_k w_k eta_k f2_k / (i lambda + xi_k^2): the boundary datum produced by
/// eliminating psi from the resolvent equation with right-hand side (f1, f2).
cplx resolvent_boundary_constant(const XiGrid& grid, double rho, double lambda, std::span<const cplx> f2);

} // namespace degschro
