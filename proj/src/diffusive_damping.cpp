#include "degschro/diffusive_damping.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "degschro/errors.hpp"
#include "degschro/io.hpp"

namespace degschro {

namespace {

double zeta_of(double beta, double rho) { return rho * std::sin(beta * std::numbers::pi) / std::numbers::pi; }

void check_beta(double beta) {
    if (!(beta > 0.0 && beta < 1.0)) throw DomainError("beta", "must lie in (0, 1)");
}

// int_a^b u^{-beta} e^{-gamma u} du, 0 <= a < b.
double kernel_integral(double a, double b, double beta, double gamma) {
    const double s = 1.0 - beta;
    if (gamma == 0.0) return (std::pow(b, s) - std::pow(a, s)) / s;
    const double lo = a > 0.0 ? boost::math::tgamma_lower(s, gamma * a) : 0.0;
    return std::pow(gamma, -s) * (boost::math::tgamma_lower(s, gamma * b) - lo);
}

std::vector<double> step_weights(std::span<const double> t_grid, double beta, double gamma) {
    if (!(gamma >= 0.0)) throw DomainError("gamma", "must be nonnegative");
    check_beta(beta);
    const std::size_t n = t_grid.size();
    if (n < 2) return {};
    const double dt = (t_grid.back() - t_grid.front()) / static_cast<double>(n - 1);
    if (!(dt > 0.0)) throw UnsupportedGridError("time grid must be increasing");
    const double tol = 1e-9 * std::max(1.0, std::abs(t_grid.back()));
    for (std::size_t j = 0; j < n; ++j) {
        const double expected = t_grid.front() + static_cast<double>(j) * dt;
        if (std::abs(t_grid[j] - expected) > tol)
            throw UnsupportedGridError("time grid is not uniform at index " + std::to_string(j));
    }
    // kw[m] = kernel mass of the step whose far end lies m steps back.
    const double g = std::tgamma(1.0 - beta);
    std::vector<double> kw(n - 1);
    for (std::size_t m = 0; m + 1 < n; ++m)
        kw[m] = kernel_integral(static_cast<double>(m) * dt, static_cast<double>(m + 1) * dt, beta, gamma) / g;
    return kw;
}

template <class T>
std::vector<T> convolve(std::span<const T> w, const std::vector<double>& kw) {
    const std::size_t n = w.size();
    std::vector<T> out(n, T{});
    for (std::size_t i = 1; i < n; ++i) {
        T s{};
        for (std::size_t j = 0; j < i; ++j) s += kw[i - 1 - j] * (0.5 * (w[j] + w[j + 1]));
        out[i] = s;
    }
    return out;
}

} // namespace

XiGrid build_xi_quadrature(double beta, std::size_t n_xi, double xi_min, double xi_max) {
    check_beta(beta);
    if (!(xi_min > 0.0)) throw RangeError("xi_min", "must be positive");
    if (!(xi_min < xi_max)) throw RangeError("xi_max", "must exceed xi_min");
    if (n_xi < 16) throw RangeError("n_xi", "must be at least 16");
    XiGrid g;
    g.beta = beta;
    g.xi_min = xi_min;
    g.xi_max = xi_max;
    g.nodes.resize(n_xi);
    g.weights.resize(n_xi);
    g.eta.resize(n_xi);
    const double u0 = std::log(xi_min), u1 = std::log(xi_max);
    const double du = (u1 - u0) / static_cast<double>(n_xi - 1);
    const double p = (2.0 * beta - 1.0) / 2.0;
    for (std::size_t k = 0; k < n_xi; ++k) {
        const double xi = k + 1 == n_xi ? xi_max : std::exp(u0 + static_cast<double>(k) * du);
        g.nodes[k] = xi;
        double w = xi * du;
        if (k == 0 || k + 1 == n_xi) w *= 0.5;
        g.weights[k] = w;
        g.eta[k] = std::pow(xi, p);
    }
    g.nodes[0] = xi_min;
    g.weights[0] += xi_min / (2.0 * beta);
    for (double& w : g.weights) w *= 2.0;
    return g;
}

double kernel_value(const XiGrid& grid, double tau, double rho, double gamma) {
    if (!(tau > 0.0)) throw DomainError("tau", "must be positive");
    double s = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k)
        s += grid.weights[k] * grid.eta[k] * grid.eta[k] * std::exp(-grid.nodes[k] * grid.nodes[k] * tau);
    return zeta_of(grid.beta, rho) * s * std::exp(-gamma * tau);
}

double exact_kernel(double beta, double tau, double rho, double gamma) {
    if (!(tau > 0.0)) throw DomainError("tau", "must be positive");
    return rho * std::pow(tau, -beta) * std::exp(-gamma * tau) / std::tgamma(1.0 - beta);
}

TauWindow resolved_tau_window(const XiGrid& grid) {
    return {10.0 / (grid.xi_max * grid.xi_max), 1e-4 / (grid.xi_min * grid.xi_min)};
}

KernelCheck check_kernel(const XiGrid& grid, std::span<const double> taus, double rho, double gamma) {
    if (!(gamma >= 0.0)) throw DomainError("gamma", "must be nonnegative");
    const TauWindow win = resolved_tau_window(grid);
    KernelCheck c;
    for (double tau : taus) {
        const double q = kernel_value(grid, tau, rho, gamma);
        const double e = exact_kernel(grid.beta, tau, rho, gamma);
        const double err = std::abs(q - e) / std::abs(e);
        const bool ok = tau >= win.lo && tau <= win.hi;
        c.tau.push_back(tau);
        c.quadrature_value.push_back(q);
        c.exact_value.push_back(e);
        c.rel_error.push_back(err);
        c.resolved.push_back(ok);
        if (ok) c.max_rel_error = std::max(c.max_rel_error, err);
    }
    return c;
}

std::string kernel_check_csv(const KernelCheck& c) {
    std::ostringstream os;
    os << "tau,quadrature,exact,rel_error\n";
    for (std::size_t i = 0; i < c.tau.size(); ++i)
        os << fmt_g17(c.tau[i]) << ',' << fmt_g17(c.quadrature_value[i]) << ',' << fmt_g17(c.exact_value[i]) << ','
           << fmt_g17(c.rel_error[i]) << '\n';
    return os.str();
}

CVector direct_fractional_integral(std::span<const cplx> w, std::span<const double> t_grid, double beta,
                                   double gamma) {
    if (w.size() != t_grid.size()) throw ShapeError("direct_fractional_integral: w and t_grid lengths differ");
    return convolve<cplx>(w, step_weights(t_grid, beta, gamma));
}

std::vector<double> direct_fractional_integral(std::span<const double> w, std::span<const double> t_grid,
                                               double beta, double gamma) {
    if (w.size() != t_grid.size()) throw ShapeError("direct_fractional_integral: w and t_grid lengths differ");
    return convolve<double>(w, step_weights(t_grid, beta, gamma));
}

ForcedPsi evolve_psi_forced(const XiGrid& grid, std::span<const cplx> signal, double dt, double rho,
                            bool keep_history) {
    if (!(dt > 0.0)) throw DomainError("dt", "must be positive");
    const std::size_t m = grid.size();
    const double zeta = zeta_of(grid.beta, rho);
    std::vector<double> decay(m), gain(m), fw(m);
    for (std::size_t k = 0; k < m; ++k) {
        const double x2 = grid.nodes[k] * grid.nodes[k];
        decay[k] = std::exp(-x2 * dt);
        gain[k] = -std::expm1(-x2 * dt) / x2 * grid.eta[k];
        fw[k] = zeta * grid.weights[k] * grid.eta[k];
    }
    ForcedPsi out;
    CVector psi(m);
    auto record = [&] {
        cplx f = 0.0;
        for (std::size_t k = 0; k < m; ++k) f += fw[k] * psi[k];
        out.flux.push_back(f);
        if (keep_history) out.psi.push_back(psi);
    };
    if (signal.empty()) return out;
    record();
    for (std::size_t n = 0; n + 1 < signal.size(); ++n) {
        const cplx s = 0.5 * (signal[n] + signal[n + 1]);
        for (std::size_t k = 0; k < m; ++k) psi[k] = decay[k] * psi[k] + gain[k] * s;
        record();
    }
    out.final_psi = psi;
    return out;
}

cplx resolvent_boundary_constant(const XiGrid& grid, double rho, double lambda, std::span<const cplx> f2) {
    if (f2.size() != grid.size()) throw ShapeError("resolvent_boundary_constant: f2 length mismatch");
    const double zeta = zeta_of(grid.beta, rho);
    cplx s = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k)
        s += grid.weights[k] * grid.eta[k] * f2[k] / cplx(grid.nodes[k] * grid.nodes[k], lambda);
    return cplx(0.0, -zeta) * s;
}

} // namespace degschro
