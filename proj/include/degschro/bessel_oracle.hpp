#pragma once

// Closed-form resolvent for kappa = x^alpha, 0 < alpha < 1, built from
// theta_{+-}(x) = x^{(1-alpha)/2} J_{+-nu}(k x^{(2-alpha)/2}), k = 2 mu / (2 - alpha),
// nu = (1-alpha)/(2-alpha), mu = i sqrt(lambda).

#include <cstddef>
#include <span>
#include <vector>

#include "degschro/core_model.hpp"

namespace degschro {

struct BesselValue {
    cplx value;
    cplx derivative;
    std::size_t terms = 0;
};

inline constexpr double kBesselMaxArg = 20.0;

/// Power series on the principal branch of (z/2)^nu, summed in extended precision until
/// a term drops below 1e-17 of the partial sum (cap 200 terms). nu > -1, |z| <= 20.
BesselValue bessel_j_full(double nu, cplx z);
cplx bessel_j(double nu, cplx z);

/// c+ = 2^{-nu} / Gamma(1 + nu), c- = 2^{nu} / Gamma(1 - nu).
double c_plus(double nu);
double c_minus(double nu);

double nu_of_alpha(double alpha);

struct ThetaValues {
    cplx plus;
    cplx minus;
    cplx dplus;   // d/dx
    cplx dminus;
};

/// theta_{+-} and their x-derivatives. alpha in [0, 1). At x = 0 the limits
/// theta_+ = 0, theta_- = d- are returned (derivatives are left as 0 there).
ThetaValues theta_pm(double x, cplx mu, double alpha);

/// theta'_+(1) = (1-alpha) J_nu(k) - mu J_{nu+1}(k), theta'_-(1) = -mu J_{1-nu}(k).
cplx theta_plus_prime_at_1(cplx mu, double alpha);
cplx theta_minus_prime_at_1(cplx mu, double alpha);

/// d+ = c+ k^nu, d- = c- k^{-nu}.
cplx d_plus(cplx mu, double alpha);
cplx d_minus(cplx mu, double alpha);

/// int_0^1 theta_+(x)^2 dx (bilinear, no conjugation) with r = 2 mu / (2 - alpha):
/// (1/(2-alpha)) r^{-2} [(r J_nu)^2 + (r J_{nu+1})^2 - 2 nu r J_nu J_{nu+1}].
cplx theta_norm_sq(cplx r, double alpha);

/// Leading small-r term (1/(2-alpha)) (c+)^2 r^{2 nu} / (1 + nu).
cplx theta_norm_sq_leading(cplx r, double alpha);

/// mu = i sqrt(lambda) (principal root), s = (i lambda)^{beta-1} (principal log).
cplx mu_of_lambda(double lambda);
cplx fractional_symbol(double lambda, double beta);

/// Connection determinant of the 2x2 system for variant P:
/// D = (1-alpha) d+ theta'_-(1) - i rho theta'_+(1) (i lambda)^{beta-1} d-, lambda = -mu^2.
cplx connection_determinant(cplx mu, double alpha, double beta, double rho);

/// theta'_+(1) - i rho (i lambda)^{beta-1} theta_+(1): the coefficient of A in the
/// variant P' (kappa = x^alpha) boundary equation.
cplx pprime_bracket(cplx mu, double alpha, double beta, double rho);

struct AnalyticResolvent {
    double lambda = 0.0;
    cplx mu;
    cplx A, B, C, Ctilde, D;
    std::vector<double> x;
    CVector y;
};

/// Solution of -lambda y + (x^alpha y_x)_x = i f1 with y_x(1) = 0 and
/// (x^alpha y_x)(0) = C - i rho (i lambda)^{beta-1} y(0).
/// x must be increasing from 0 to 1; f1 is sampled on x; integrals use the trapezoid rule.
AnalyticResolvent analytic_resolvent_P(double lambda, std::span<const double> x, std::span<const cplx> f1, cplx C,
                                       double alpha, double beta, double rho);

/// Same equation with y(0) = 0 and y_x(1) = -C + i rho (i lambda)^{beta-1} y(1) (variant P',
/// kappa = x^alpha, alpha in (0, 1)). B = 0; D holds the bracket.
AnalyticResolvent analytic_case_Pprime_poweralpha(double lambda, std::span<const double> x,
                                                  std::span<const cplx> f1, cplx C, double alpha, double beta,
                                                  double rho);

/// Grid [0, x_1, ..., x_n] from the nodes of an XGrid-like node list.
std::vector<double> with_origin(std::span<const double> nodes);

} // namespace degschro
