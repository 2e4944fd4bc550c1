#include "doctest.h"

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>

#include "degschro/diffusive_damping.hpp"
#include "degschro/errors.hpp"
#include "degschro/io.hpp"

using namespace degschro;

namespace {

// int_0^t (t-s)^{-beta} e^{-gamma (t-s)} w(s) ds / Gamma(1-beta), via u = (t-s)^{1-beta}
// which removes the singularity; composite Simpson in u.
template <class W>
double fractional_oracle(W w, double t, double beta, double gamma = 0.0, int n = 20000) {
    const double p = 1.0 - beta;
    const double U = std::pow(t, p);
    auto f = [&](double u) {
        const double tau = std::pow(u, 1.0 / p);
        return std::exp(-gamma * tau) * w(t - tau);
    };
    const double h = U / n;
    double s = f(0.0) + f(U);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
    return s * h / 3.0 / p / std::tgamma(1.0 - beta);
}

std::vector<double> uniform(double t1, std::size_t steps) {
    std::vector<double> t(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) t[i] = t1 * static_cast<double>(i) / static_cast<double>(steps);
    return t;
}

double worst_resolved_error(const XiGrid& g) {
    const auto w = resolved_tau_window(g);
    double worst = 0.0;
    for (int i = 0; i <= 400; ++i) {
        const double tau = w.lo * std::pow(w.hi / w.lo, i / 400.0);
        const double e = exact_kernel(g.beta, tau, 1.0);
        worst = std::max(worst, std::abs(kernel_value(g, tau, 1.0) - e) / e);
    }
    return worst;
}

} // namespace

TEST_CASE("xi grid structure") {
    const auto g = build_xi_quadrature(0.5, 200, 1e-4, 1e4);
    CHECK(g.size() == 200);
    for (std::size_t k = 0; k < g.size(); ++k) {
        CHECK(g.eta[k] == 1.0);
        CHECK(g.weights[k] > 0.0);
        CHECK(g.nodes[k] >= 1e-4);
        CHECK(g.nodes[k] <= 1e4);
    }
    CHECK(g.nodes.front() == 1e-4);
    CHECK(g.nodes.back() == 1e4);

    const auto g2 = build_xi_quadrature(0.75, 16, 4.0, 64.0);
    CHECK(g2.nodes[0] == 4.0);
    CHECK(g2.eta[0] == doctest::Approx(1.4142136).epsilon(1e-7));

    CHECK_THROWS_AS(build_xi_quadrature(0.5, 200, 1e4, 1e4), RangeError);
    CHECK_THROWS_AS(build_xi_quadrature(0.5, 200, 1e4, 1.0), RangeError);
    CHECK_THROWS_AS(build_xi_quadrature(0.5, 15), RangeError);
    CHECK_THROWS_AS(build_xi_quadrature(0.5, 200, 0.0, 1.0), RangeError);
    CHECK_THROWS_AS(build_xi_quadrature(1.0), DomainError);
}

TEST_CASE("kernel values") {
    const auto g = build_xi_quadrature(0.5);
    const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
    CHECK(std::abs(kernel_value(g, 1.0, 1.0) - inv_sqrt_pi) / inv_sqrt_pi < 1e-6);
    CHECK(std::abs(kernel_value(g, 4.0, 1.0) - 0.5 * inv_sqrt_pi) / (0.5 * inv_sqrt_pi) < 1e-6);
    CHECK(kernel_value(g, 4.0, 1.0) == doctest::Approx(0.2820948).epsilon(1e-6));
    CHECK(exact_kernel(0.5, 1.0, 1.0) == doctest::Approx(0.5641896).epsilon(1e-7));

    double prev = kernel_value(g, 1e2, 1.0);
    for (double tau = 1e3; tau <= 1e16; tau *= 10.0) {
        const double v = kernel_value(g, tau, 1.0);
        CHECK(v <= prev);
        if (prev > 0.0) CHECK(v < prev);
        prev = v;
    }
    CHECK(prev < 1e-300);
    CHECK_THROWS_AS(kernel_value(g, 0.0, 1.0), DomainError);
}

TEST_CASE("kernel equivalence on the resolved window") {
    for (double beta : {0.3, 0.5, 0.7}) {
        CAPTURE(beta);
        CHECK(worst_resolved_error(build_xi_quadrature(beta)) < 1e-4);
    }
}

TEST_CASE("kernel error decreases under node doubling") {
    for (double beta : {0.3, 0.5, 0.7}) {
        double prev = INFINITY;
        for (std::size_t n : {16, 32, 64, 128}) {
            const double e = worst_resolved_error(build_xi_quadrature(beta, n));
            CAPTURE(beta);
            CAPTURE(n);
            CHECK(e < prev);
            prev = e;
        }
    }
}

TEST_CASE("kernel with exponential tempering") {
    const auto g = build_xi_quadrature(0.4);
    for (double tau : {0.01, 0.3, 5.0}) {
        const double e = exact_kernel(0.4, tau, 2.0, 0.7);
        CHECK(std::abs(kernel_value(g, tau, 2.0, 0.7) - e) / e < 1e-5);
    }
}

TEST_CASE("kernel check table") {
    const auto g = build_xi_quadrature(0.5);
    const std::vector<double> taus{1e-10, 1e-2, 1.0, 1e2, 1e6};
    const auto c = check_kernel(g, taus, 1.0);
    CHECK_FALSE(c.resolved[0]);
    CHECK(c.resolved[1]);
    CHECK(c.resolved[3]);
    CHECK_FALSE(c.resolved[4]);
    CHECK(c.rel_error[4] > 1e-4);  // out of the window and genuinely inaccurate
    CHECK(c.max_rel_error < 1e-4);
    const auto csv = parse_csv(kernel_check_csv(c));
    CHECK(csv.header == std::vector<std::string>{"tau", "quadrature", "exact", "rel_error"});
    CHECK(csv.rows.size() == taus.size());
}

TEST_CASE("direct fractional integral") {
    const auto t = uniform(1.0, 1000);
    std::vector<double> one(t.size(), 1.0), zero(t.size(), 0.0), lin(t);
    const auto r1 = direct_fractional_integral(one, t, 0.5);
    CHECK(r1.back() == doctest::Approx(2.0 / std::sqrt(std::numbers::pi)).epsilon(1e-12));
    CHECK(r1.back() == doctest::Approx(1.1283792).epsilon(1e-7));
    for (double v : direct_fractional_integral(zero, t, 0.5)) CHECK(v == 0.0);

    const double exact = 1.0 / std::tgamma(2.5);
    CHECK(exact == doctest::Approx(0.7522528).epsilon(1e-7));
    const double oracle = fractional_oracle([](double s) { return s; }, 1.0, 0.5);
    CHECK(std::abs(oracle - exact) < 1e-9);
    CHECK(std::abs(direct_fractional_integral(lin, t, 0.5).back() - exact) < 1e-5);

    std::vector<double> sn(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) sn[i] = std::sin(3.0 * t[i]);
    const auto rs = direct_fractional_integral(sn, t, 0.3, 0.8);
    for (std::size_t i : {250u, 600u, 1000u}) {
        const double o = fractional_oracle([](double s) { return std::sin(3.0 * s); }, t[i], 0.3, 0.8);
        CHECK(std::abs(rs[i] - o) < 1e-5);
    }

    // gamma > 0, w = 1: gamma^{beta-1} lower_gamma(1-beta, gamma t) / Gamma(1-beta)
    const auto rg = direct_fractional_integral(one, t, 0.5, 2.0);
    const double eg = boost::math::gamma_p(0.5, 2.0) * std::pow(2.0, -0.5);
    CHECK(rg.back() == doctest::Approx(eg).epsilon(1e-12));

    auto bad = t;
    bad[3] += 1e-4;
    CHECK_THROWS_AS(direct_fractional_integral(one, bad, 0.5), UnsupportedGridError);
    CHECK_THROWS_AS(direct_fractional_integral(std::vector<double>(3, 1.0), t, 0.5), ShapeError);
}

TEST_CASE("forced psi evolution") {
    const auto g = build_xi_quadrature(0.5);
    const double dt = 1e-3;
    {
        const CVector zero(1001, 0.0);
        const auto r = evolve_psi_forced(g, zero, dt, 1.0, true);
        for (auto f : r.flux) CHECK(f == cplx(0.0));
        for (auto p : r.final_psi) CHECK(p == cplx(0.0));
    }
    {
        XiGrid one;
        one.nodes = {3.0};
        one.weights = {1.0};
        one.eta = {std::pow(3.0, 0.25)};
        one.beta = 0.75;
        one.xi_min = one.xi_max = 3.0;
        const CVector sig(501, 1.0);
        const auto r = evolve_psi_forced(one, sig, dt, 1.0, true);
        for (std::size_t n = 0; n < sig.size(); n += 50) {
            const double t = static_cast<double>(n) * dt;
            const double exact = one.eta[0] * (1.0 - std::exp(-9.0 * t)) / 9.0;
            CHECK(std::abs(r.psi[n][0] - exact) <= 1e-14);
        }
    }
    {
        const CVector sig(10001, 1.0);
        const auto r = evolve_psi_forced(g, sig, dt, 1.0);
        const double target = 2.0 / std::sqrt(std::numbers::pi);
        CHECK(std::abs(r.flux[1000].real() - target) / target < 1e-3);
        for (std::size_t n : {100u, 300u, 2000u, 5000u, 10000u}) {
            const double t = static_cast<double>(n) * dt;
            const double e = std::sqrt(t) * target;
            CHECK(std::abs(r.flux[n].real() - e) / e < 1e-3);
        }
    }
}

TEST_CASE("flux equivalence for smooth signals") {
    const auto g = build_xi_quadrature(0.3);
    const double dt = 2e-3, rho = 1.7;
    const auto t = uniform(10.0, 5000);
    CVector sig(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) sig[i] = cplx(std::cos(t[i]), 0.5 * std::sin(2.0 * t[i])) + 1.0;
    const auto r = evolve_psi_forced(g, sig, dt, rho);
    const auto ref = direct_fractional_integral(sig, t, 0.3);
    double scale = 0.0;
    for (auto v : ref) scale = std::max(scale, rho * std::abs(v));
    for (std::size_t i = 50; i < t.size(); i += 37) CHECK(std::abs(r.flux[i] - rho * ref[i]) < 1e-3 * scale);
}

TEST_CASE("modes evolve independently") {
    const auto g = build_xi_quadrature(0.6, 64);
    XiGrid lo = g, hi = g;
    const std::size_t cut = 29;
    lo.nodes.resize(cut), lo.weights.resize(cut), lo.eta.resize(cut);
    hi.nodes.erase(hi.nodes.begin(), hi.nodes.begin() + cut);
    hi.weights.erase(hi.weights.begin(), hi.weights.begin() + cut);
    hi.eta.erase(hi.eta.begin(), hi.eta.begin() + cut);
    CVector sig(800);
    for (std::size_t i = 0; i < sig.size(); ++i) sig[i] = std::exp(cplx(0.0, 0.01 * static_cast<double>(i)));
    const auto all = evolve_psi_forced(g, sig, 1e-2, 1.0);
    const auto a = evolve_psi_forced(lo, sig, 1e-2, 1.0), b = evolve_psi_forced(hi, sig, 1e-2, 1.0);
    for (std::size_t k = 0; k < g.size(); ++k)
        CHECK(all.final_psi[k] == (k < cut ? a.final_psi[k] : b.final_psi[k - cut]));
    for (std::size_t n = 0; n < sig.size(); ++n)
        CHECK(std::abs(all.flux[n] - a.flux[n] - b.flux[n]) <= 1e-14 * (1.0 + std::abs(all.flux[n])));
}

TEST_CASE("resolvent boundary constant reproduces the Laplace symbol") {
    // f2 = eta: -i zeta int eta^2 / (i lambda + xi^2) = -i rho (i lambda)^{beta-1}.
    // The xi^{2 beta - 3} tail beyond xi_max is not small for beta near 1, hence the wide grid.
    for (double beta : {0.3, 0.5, 0.7})
        for (double lambda : {1e-2, 1.0, -3.0}) {
            const auto g = build_xi_quadrature(beta, 400, 1e-8, 1e8);
            CVector f2(g.eta.begin(), g.eta.end());
            const cplx c = resolvent_boundary_constant(g, 1.3, lambda, f2);
            const cplx e = cplx(0.0, -1.3) * std::pow(cplx(0.0, lambda), beta - 1.0);
            CHECK(std::abs(c - e) / std::abs(e) < 1e-4);
        }
}
