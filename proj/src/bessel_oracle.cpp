#include "degschro/bessel_oracle.hpp"

#include <cmath>
#include <numbers>

#include "degschro/errors.hpp"

namespace degschro {

namespace {

using lcplx = std::complex<long double>;

void check_alpha(double alpha, bool allow_zero) {
    const bool ok = allow_zero ? (alpha >= 0.0 && alpha < 1.0) : (alpha > 0.0 && alpha < 1.0);
    if (!ok) throw DomainError("alpha", allow_zero ? "must lie in [0, 1)" : "must lie in (0, 1)");
}

double kernel_constant(double alpha) {
    const double nu = nu_of_alpha(alpha);
    return std::numbers::pi / (2.0 * std::sin(nu * std::numbers::pi)) * 2.0 / (2.0 - alpha);
}

// cumulative trapezoid of g on x, starting at 0
CVector cumtrapz(std::span<const double> x, const CVector& g) {
    CVector out(x.size());
    for (std::size_t i = 1; i < x.size(); ++i) out[i] = out[i - 1] + 0.5 * (x[i] - x[i - 1]) * (g[i] + g[i - 1]);
    return out;
}

void check_grid(std::span<const double> x, std::span<const cplx> f1) {
    if (x.size() < 2) throw ShapeError("analytic resolvent: grid needs at least 2 points");
    if (x.size() != f1.size()) throw ShapeError("analytic resolvent: f1 and x lengths differ");
    if (x.front() != 0.0 || std::abs(x.back() - 1.0) > 1e-14)
        throw UnsupportedGridError("analytic resolvent: grid must run from 0 to 1");
    for (std::size_t i = 1; i < x.size(); ++i)
        if (!(x[i] > x[i - 1])) throw UnsupportedGridError("analytic resolvent: grid must be increasing");
}

struct Particular {
    std::vector<ThetaValues> th;
    CVector Ip, Im;  // int_0^x i f1 theta_+, int_0^x i f1 theta_-
    double K = 0.0;
};

Particular particular(std::span<const double> x, std::span<const cplx> f1, cplx mu, double alpha) {
    Particular p;
    p.K = kernel_constant(alpha);
    const cplx I(0.0, 1.0);
    CVector gp(x.size()), gm(x.size());
    p.th.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        p.th.push_back(theta_pm(x[i], mu, alpha));
        gp[i] = I * f1[i] * p.th[i].plus;
        gm[i] = I * f1[i] * p.th[i].minus;
    }
    p.Ip = cumtrapz(x, gp);
    p.Im = cumtrapz(x, gm);
    return p;
}

} // namespace

BesselValue bessel_j_full(double nu, cplx z) {
    if (!(nu > -1.0)) throw DomainError("nu", "must exceed -1");
    if (std::abs(z) > kBesselMaxArg) throw RangeError("z", "|z| exceeds the series range 20");
    BesselValue r;
    if (z == cplx(0.0)) {
        if (nu == 0.0) {
            r.value = 1.0;
        } else if (nu > 0.0) {
            r.value = 0.0;
            r.derivative = nu == 1.0 ? 0.5 : (nu < 1.0 ? cplx(INFINITY) : cplx(0.0));
        } else {
            throw RangeError("z", "J_nu(0) is unbounded for nu < 0");
        }
        r.terms = 1;
        return r;
    }
    const lcplx half = lcplx(z) / 2.0L;
    const lcplx q = -half * half;
    const long double lnu = nu;
    lcplx term = std::exp(lnu * std::log(half)) / std::tgamma(lnu + 1.0L);
    lcplx sum = term, dsum = lnu * term;
    std::size_t m = 0;
    while (m < 200) {
        term *= q / ((static_cast<long double>(m) + 1.0L) * (lnu + static_cast<long double>(m) + 1.0L));
        ++m;
        sum += term;
        dsum += (lnu + 2.0L * static_cast<long double>(m)) * term;
        if (std::abs(term) < 1e-17L * std::abs(sum)) break;
    }
    r.value = cplx(sum);
    r.derivative = cplx(dsum / lcplx(z));
    r.terms = m + 1;
    return r;
}

cplx bessel_j(double nu, cplx z) { return bessel_j_full(nu, z).value; }

double c_plus(double nu) { return std::pow(2.0, -nu) / std::tgamma(1.0 + nu); }
double c_minus(double nu) { return std::pow(2.0, nu) / std::tgamma(1.0 - nu); }

double nu_of_alpha(double alpha) { return (1.0 - alpha) / (2.0 - alpha); }

ThetaValues theta_pm(double x, cplx mu, double alpha) {
    check_alpha(alpha, true);
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("x", "must lie in [0, 1]");
    const double nu = nu_of_alpha(alpha);
    const double a = (1.0 - alpha) / 2.0, b = (2.0 - alpha) / 2.0;
    const cplx k = 2.0 * mu / (2.0 - alpha);
    ThetaValues t;
    if (x == 0.0) {
        t.minus = d_minus(mu, alpha);
        return t;
    }
    const double xa = std::pow(x, a), xb = std::pow(x, b);
    const cplx z = k * xb;
    const BesselValue jp = bessel_j_full(nu, z), jm = bessel_j_full(-nu, z);
    t.plus = xa * jp.value;
    t.minus = xa * jm.value;
    // d/dx [x^a J(k x^b)] = a x^{a-1} J + x^a J'(k x^b) k b x^{b-1}
    t.dplus = a * xa / x * jp.value + xa * jp.derivative * k * b * xb / x;
    t.dminus = a * xa / x * jm.value + xa * jm.derivative * k * b * xb / x;
    return t;
}

cplx theta_plus_prime_at_1(cplx mu, double alpha) {
    check_alpha(alpha, true);
    const double nu = nu_of_alpha(alpha);
    const cplx k = 2.0 * mu / (2.0 - alpha);
    return (1.0 - alpha) * bessel_j(nu, k) - mu * bessel_j(nu + 1.0, k);
}

cplx theta_minus_prime_at_1(cplx mu, double alpha) {
    check_alpha(alpha, true);
    const double nu = nu_of_alpha(alpha);
    return -mu * bessel_j(1.0 - nu, 2.0 * mu / (2.0 - alpha));
}

cplx d_plus(cplx mu, double alpha) {
    const double nu = nu_of_alpha(alpha);
    return c_plus(nu) * std::pow(2.0 * mu / (2.0 - alpha), nu);
}

cplx d_minus(cplx mu, double alpha) {
    const double nu = nu_of_alpha(alpha);
    return c_minus(nu) * std::pow(2.0 * mu / (2.0 - alpha), -nu);
}

cplx theta_norm_sq(cplx r, double alpha) {
    check_alpha(alpha, true);
    if (std::abs(r) > kBesselMaxArg) throw RangeError("r", "|r| exceeds the series range 20");
    if (r == cplx(0.0)) return 0.0;
    const double nu = nu_of_alpha(alpha);
    const cplx j0 = bessel_j(nu, r), j1 = bessel_j(nu + 1.0, r);
    const cplx a = r * j0, b = r * j1;
    return (a * a + b * b - 2.0 * nu * a * j1) / (r * r) / (2.0 - alpha);
}

cplx theta_norm_sq_leading(cplx r, double alpha) {
    check_alpha(alpha, true);
    const double nu = nu_of_alpha(alpha);
    const double c = c_plus(nu);
    return c * c * std::pow(r, 2.0 * nu) / ((2.0 - alpha) * (1.0 + nu));
}

cplx mu_of_lambda(double lambda) { return cplx(0.0, 1.0) * std::sqrt(cplx(lambda)); }

cplx fractional_symbol(double lambda, double beta) {
    if (lambda == 0.0) throw DomainError("lambda", "must be nonzero");
    return std::pow(cplx(0.0, lambda), beta - 1.0);
}

namespace {
// (i lambda)^{beta-1} with lambda = -mu^2
cplx symbol_from_mu(cplx mu, double beta) { return std::pow(cplx(0.0, 1.0) * (-mu * mu), beta - 1.0); }
} // namespace

cplx connection_determinant(cplx mu, double alpha, double beta, double rho) {
    check_alpha(alpha, false);
    const cplx I(0.0, 1.0);
    const cplx s = symbol_from_mu(mu, beta);
    return (1.0 - alpha) * d_plus(mu, alpha) * theta_minus_prime_at_1(mu, alpha) -
           I * rho * theta_plus_prime_at_1(mu, alpha) * s * d_minus(mu, alpha);
}

cplx pprime_bracket(cplx mu, double alpha, double beta, double rho) {
    check_alpha(alpha, false);
    const cplx I(0.0, 1.0);
    const cplx s = symbol_from_mu(mu, beta);
    const cplx th1 = bessel_j(nu_of_alpha(alpha), 2.0 * mu / (2.0 - alpha));
    return theta_plus_prime_at_1(mu, alpha) - I * rho * s * th1;
}

AnalyticResolvent analytic_resolvent_P(double lambda, std::span<const double> x, std::span<const cplx> f1, cplx C,
                                       double alpha, double beta, double rho) {
    check_alpha(alpha, false);
    check_grid(x, f1);
    const cplx I(0.0, 1.0);
    AnalyticResolvent r;
    r.lambda = lambda;
    r.mu = mu_of_lambda(lambda);
    r.C = C;
    const cplx s = fractional_symbol(lambda, beta);
    const cplx dp = d_plus(r.mu, alpha), dm = d_minus(r.mu, alpha);
    const cplx tp1 = theta_plus_prime_at_1(r.mu, alpha), tm1 = theta_minus_prime_at_1(r.mu, alpha);
    const Particular p = particular(x, f1, r.mu, alpha);
    const std::size_t n = x.size();
    r.Ctilde = p.K * (p.Ip[n - 1] * tm1 - tp1 * p.Im[n - 1]);

    // [(1-a) d+, i rho s d-; theta'_+(1), theta'_-(1)] [A; B] = [C; Ctilde]
    const cplx m11 = (1.0 - alpha) * dp, m12 = I * rho * s * dm, m21 = tp1, m22 = tm1;
    r.D = m11 * m22 - m12 * m21;
    if (std::abs(r.D) < 1e-14) throw NearSingularResolventError("|D| = " + std::to_string(std::abs(r.D)));
    r.A = (C * m22 - m12 * r.Ctilde) / r.D;
    r.B = (m11 * r.Ctilde - m21 * C) / r.D;

    r.x.assign(x.begin(), x.end());
    r.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const cplx yp = -p.K * (p.Ip[i] * p.th[i].minus - p.th[i].plus * p.Im[i]);
        r.y[i] = r.A * p.th[i].plus + r.B * p.th[i].minus + yp;
    }
    return r;
}

AnalyticResolvent analytic_case_Pprime_poweralpha(double lambda, std::span<const double> x,
                                                  std::span<const cplx> f1, cplx C, double alpha, double beta,
                                                  double rho) {
    check_alpha(alpha, false);
    check_grid(x, f1);
    const cplx I(0.0, 1.0);
    AnalyticResolvent r;
    r.lambda = lambda;
    r.mu = mu_of_lambda(lambda);
    r.C = C;
    const cplx s = fractional_symbol(lambda, beta);
    const cplx tp1 = theta_plus_prime_at_1(r.mu, alpha), tm1 = theta_minus_prime_at_1(r.mu, alpha);
    const Particular p = particular(x, f1, r.mu, alpha);
    const std::size_t n = x.size();
    r.Ctilde = p.K * (p.Ip[n - 1] * tm1 - tp1 * p.Im[n - 1]);
    const cplx yp1 = -p.K * (p.Ip[n - 1] * p.th[n - 1].minus - p.th[n - 1].plus * p.Im[n - 1]);
    r.D = tp1 - I * rho * s * p.th[n - 1].plus;
    if (std::abs(r.D) < 1e-14) throw NearSingularResolventError("|bracket| = " + std::to_string(std::abs(r.D)));
    r.A = (r.Ctilde - C + I * rho * s * yp1) / r.D;
    r.B = 0.0;
    r.x.assign(x.begin(), x.end());
    r.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const cplx yp = -p.K * (p.Ip[i] * p.th[i].minus - p.th[i].plus * p.Im[i]);
        r.y[i] = r.A * p.th[i].plus + yp;
    }
    return r;
}

std::vector<double> with_origin(std::span<const double> nodes) {
    std::vector<double> x;
    x.reserve(nodes.size() + 1);
    x.push_back(0.0);
    x.insert(x.end(), nodes.begin(), nodes.end());
    return x;
}

} // namespace degschro
