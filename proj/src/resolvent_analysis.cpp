#include "degschro/resolvent_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>
#include <thread>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "degschro/bessel_oracle.hpp"
#include "degschro/errors.hpp"
#include "degschro/io.hpp"

namespace degschro {

namespace {

cplx dot(const StateVector& a, const StateVector& b) {
    cplx s = 0.0;
    for (std::size_t i = 0; i < a.y.size(); ++i) s += a.y[i] * std::conj(b.y[i]);
    for (std::size_t k = 0; k < a.psi.size(); ++k) s += a.psi[k] * std::conj(b.psi[k]);
    return s;
}

void axpy(cplx s, const StateVector& x, StateVector& y) {
    for (std::size_t i = 0; i < y.y.size(); ++i) y.y[i] += s * x.y[i];
    for (std::size_t k = 0; k < y.psi.size(); ++k) y.psi[k] += s * x.psi[k];
}

double enorm(const StateVector& a) { return std::sqrt(dot(a, a).real()); }

// Largest eigenpair of the symmetric tridiagonal (alpha, beta); returns (value, last component of its vector,
// vector).
struct TopEig {
    double value;
    std::vector<double> vec;
};

TopEig top_eigen(const std::vector<double>& al, const std::vector<double>& be) {
    const std::size_t k = al.size();
    std::vector<double> d = al, e(k > 1 ? k - 1 : 1), z(k * k);
    for (std::size_t i = 0; i + 1 < k; ++i) e[i] = be[i];
    const lapack_int info = LAPACKE_dstev(LAPACK_COL_MAJOR, 'V', static_cast<lapack_int>(k), d.data(), e.data(),
                                          z.data(), static_cast<lapack_int>(k));
    if (info != 0) throw NumericalError("dstev failed with info " + std::to_string(info));
    TopEig t;
    t.value = d[k - 1];
    t.vec.assign(z.begin() + static_cast<std::ptrdiff_t>((k - 1) * k), z.begin() + static_cast<std::ptrdiff_t>(k * k));
    return t;
}

double slope_between(std::span<const double> lam, std::span<const double> nrm, std::size_t i) {
    return (std::log(nrm[i + 1]) - std::log(nrm[i])) / (std::log(std::abs(lam[i + 1])) - std::log(std::abs(lam[i])));
}

} // namespace

const char* to_string(Regime r) { return r == Regime::NearZero ? "low" : "high"; }

Regime regime_from_string(const std::string& s) {
    if (s == "low" || s == "NearZero") return Regime::NearZero;
    if (s == "high" || s == "HighFrequency") return Regime::HighFrequency;
    throw DomainError("regime", "expected low or high, got '" + s + "'");
}

NormResult resolvent_norm_euclidean(const ArrowMatrix& a, double lambda, const NormOptions& opt) {
    const cplx z(0.0, lambda);
    const ArrowMatrix adj = a.adjoint();
    const ShiftedArrowSolver fwd(a, z);               // (z - A)^{-1}
    const ShiftedArrowSolver bwd(adj, std::conj(z));  // (z - A)^{-H}
    const std::size_t dim = a.dimension();
    auto apply = [&](const StateVector& v) { return bwd.solve(fwd.solve(v)); };

    StateVector start = StateVector::zeros(a.ny(), a.npsi());
    for (std::size_t i = 0; i < a.ny(); ++i) start.y[i] = 1.0 + 0.25 * std::sin(0.7 * static_cast<double>(i) + 0.3);
    for (std::size_t k = 0; k < a.npsi(); ++k)
        start.psi[k] = 1.0 + 0.25 * std::cos(1.3 * static_cast<double>(k) + 0.1);

    NormResult res;
    double best = 0.0;
    std::size_t used = 0, stall = 0;
    constexpr std::size_t kStall = 5;
    while (used < opt.max_iter) {
        start = cplx(1.0 / enorm(start)) * start;
        std::vector<StateVector> V{start};
        std::vector<double> al, be;
        const std::size_t basis = std::min({opt.restart, dim, opt.max_iter - used});
        TopEig top{0.0, {}};
        bool done = false;
        for (std::size_t j = 0; j < basis; ++j) {
            StateVector w = apply(V[j]);
            ++used;
            const double aj = dot(w, V[j]).real();
            al.push_back(aj);
            for (int pass = 0; pass < 2; ++pass)
                for (const auto& v : V) axpy(-dot(w, v), v, w);
            const double bj = enorm(w);
            top = top_eigen(al, be);
            const double resid = bj * std::abs(top.vec.back());
            res.residual = resid / std::max(top.value, 1e-300);
            // a near-degenerate top cluster fixes the norm long before the singular vector;
            // accept when the Ritz value has not moved by tol over the last kStall steps
            stall = top.value - best <= opt.tol * top.value ? stall + 1 : 0;
            best = std::max(best, top.value);
            if (res.residual < opt.tol || bj <= 1e-14 * top.value || stall >= kStall) {
                done = true;
                break;
            }
            be.push_back(bj);
            V.push_back(cplx(1.0 / bj) * w);
        }
        if (done) {
            res.norm = std::sqrt(top.value);
            res.iterations = used;
            if (!std::isfinite(res.norm) || res.norm > 1e14)
                throw SpectralCollisionError("i lambda is numerically an eigenvalue (resolvent norm " +
                                                 std::to_string(res.norm) + ")",
                                             0.0, lambda);
            return res;
        }
        // explicit restart from the current Ritz vector
        StateVector r = StateVector::zeros(a.ny(), a.npsi());
        for (std::size_t c = 0; c < top.vec.size(); ++c) axpy(top.vec[c], V[c], r);
        start = r;
    }
    throw NumericalError("resolvent_norm: no convergence at lambda = " + std::to_string(lambda) +
                         " after " + std::to_string(used) + " iterations (residual " +
                         std::to_string(res.residual) + ", estimate " + std::to_string(std::sqrt(best)) + ")");
}

double resolvent_norm(const SystemOperator& op, double lambda, const NormOptions& opt) {
    op.problem().require_undamped_kernel();
    return resolvent_norm_euclidean(op.scaled_matrix(), lambda, opt).norm;
}

StateVector solve_resolvent(const SystemOperator& op, double lambda, const StateVector& f) {
    check_shape(f, op.weights());
    return ShiftedArrowSolver(op.matrix(), cplx(0.0, lambda)).solve(f);
}

PowerFit fit_power_law(std::span<const double> lambda, std::span<const double> norm, std::size_t lo,
                       std::size_t hi) {
    if (lambda.size() != norm.size()) throw ShapeError("fit_power_law: length mismatch");
    if (hi >= lambda.size() || hi < lo) throw RangeError("window", "invalid index range");
    if (hi - lo < 2) throw InsufficientDataError("power-law fit needs at least 3 points");
    double mx = 0.0, my = 0.0;
    const double n = static_cast<double>(hi - lo + 1);
    for (std::size_t i = lo; i <= hi; ++i) {
        if (!(norm[i] > 0.0) || lambda[i] == 0.0) throw DegenerateDataError("nonpositive value in power-law fit");
        mx += std::log(std::abs(lambda[i]));
        my += std::log(norm[i]);
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = lo; i <= hi; ++i) {
        const double dx = std::log(std::abs(lambda[i])) - mx, dy = std::log(norm[i]) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    PowerFit f;
    f.exponent = sxy / sxx;
    f.intercept = my - f.exponent * mx;
    f.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
    f.lo = lo;
    f.hi = hi;
    return f;
}

PowerFit fit_power_law_auto(std::span<const double> lambda, std::span<const double> norm, Regime regime,
                            std::size_t min_points) {
    const std::size_t n = lambda.size();
    if (n != norm.size()) throw ShapeError("fit_power_law_auto: length mismatch");
    if (n < min_points || min_points < 2)
        throw InsufficientDataError("need at least " + std::to_string(min_points) + " points, have " +
                                    std::to_string(n));
    std::vector<double> s(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) s[i] = slope_between(lambda, norm, i);
    // |lambda| grows with the index after sorting; the asymptotic end is small |lambda| for NearZero.
    std::size_t best_lo = 0, best_hi = 0;
    bool found = false;
    for (std::size_t lo = 0; lo + min_points <= n; ++lo) {
        double mn = INFINITY, mx = -INFINITY, sum = 0.0;
        for (std::size_t hi = lo + 1; hi < n; ++hi) {
            const double v = s[hi - 1];
            mn = std::min(mn, v);
            mx = std::max(mx, v);
            sum += v;
            const double mean = sum / static_cast<double>(hi - lo);
            if (mx - mn > 0.1 * std::abs(mean)) break;
            if (hi - lo + 1 < min_points) continue;
            const std::size_t len = hi - lo + 1, best_len = best_hi - best_lo + 1;
            const bool better = !found || len > best_len ||
                                (len == best_len && regime == Regime::HighFrequency && lo > best_lo);
            if (better) {
                best_lo = lo;
                best_hi = hi;
                found = true;
            }
        }
    }
    if (!found)
        throw InsufficientDataError("no window of " + std::to_string(min_points) +
                                    " points with local slopes stable to 10%");
    return fit_power_law(lambda, norm, best_lo, best_hi);
}

std::vector<double> log_space(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0 && hi > lo) || n < 2) throw RangeError("lambda", "need 0 < lo < hi and at least 2 points");
    std::vector<double> v(n);
    const double a = std::log(lo), b = std::log(hi);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = i + 1 == n ? hi : std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    v[0] = lo;
    return v;
}

ResolventScan scan_from_norms(std::span<const double> lambdas, std::span<const double> norms, Regime regime) {
    ResolventScan s;
    s.regime = regime;
    s.lambda.assign(lambdas.begin(), lambdas.end());
    s.norm.assign(norms.begin(), norms.end());
    for (std::size_t i = 1; i < s.lambda.size(); ++i)
        if (!(std::abs(s.lambda[i]) > std::abs(s.lambda[i - 1])))
            throw DomainError("lambda", "scan values must be sorted by increasing |lambda|");
    try {
        s.fit = fit_power_law_auto(s.lambda, s.norm, regime);
    } catch (const InsufficientDataError&) {
        if (s.lambda.size() < 3) throw;
        s.fit = fit_power_law(s.lambda, s.norm, 0, s.lambda.size() - 1);
        s.stable_window = false;
    }
    return s;
}

ResolventScan scan_resolvent(const SystemOperator& op, std::span<const double> lambdas, Regime regime,
                             std::size_t threads, const NormOptions& opt) {
    op.problem().require_undamped_kernel();
    const std::size_t n = lambdas.size();
    std::vector<double> norms(n);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, std::max<std::size_t>(1, n));
    std::vector<std::future<void>> jobs;
    for (std::size_t t = 0; t < threads; ++t)
        jobs.push_back(std::async(std::launch::async, [&, t] {
            for (std::size_t i = t; i < n; i += threads) norms[i] = resolvent_norm(op, lambdas[i], opt);
        }));
    for (auto& j : jobs) j.get();
    return scan_from_norms(lambdas, norms, regime);
}

ExponentPrediction theoretical_exponents(const ProblemSpec& spec) {
    ExponentPrediction p;
    const double b = spec.beta();
    if (spec.variant() == Variant::P) {
        const double a = *spec.alpha();
        p.theta = 1.0;
        p.upsilon = std::max(1.0, (4.0 - 3.0 * a) / (4.0 - 2.0 * a) - b);
        p.upsilon_quoted = true;
    } else {
        p.theta = spec.alpha() ? 1.0 : 2.0 - b;
        p.upsilon = 1.0 - b;
    }
    p.varsigma = std::max(p.theta, p.upsilon);
    p.decay_exponent = 2.0 / p.varsigma;
    return p;
}

namespace {
template <class F>
ScalingFit log_log_slope(std::span<const cplx> mu_grid, F&& value) {
    if (mu_grid.size() < 2) throw InsufficientDataError("scaling fit needs at least 2 mu values");
    std::vector<double> x, y;
    for (const cplx mu : mu_grid) {
        if (std::abs(mu) > 0.1) throw DomainError("mu", "|mu| must not exceed 0.1");
        x.push_back(std::abs(mu));
        y.push_back(std::abs(value(mu)));
    }
    std::vector<std::size_t> order(x.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto i, auto j) { return x[i] < x[j]; });
    std::vector<double> xs, ys;
    for (auto i : order) {
        xs.push_back(x[i]);
        ys.push_back(y[i]);
    }
    const PowerFit f = fit_power_law(xs, ys, 0, xs.size() - 1);
    return {f.exponent, f.r_squared};
}
} // namespace

ScalingFit verify_determinant_scaling(double alpha, double beta, double rho, std::span<const cplx> mu_grid) {
    return log_log_slope(mu_grid, [&](cplx mu) { return connection_determinant(mu, alpha, beta, rho); });
}

ScalingFit verify_pprime_bracket_scaling(double alpha, double beta, double rho, std::span<const cplx> mu_grid) {
    return log_log_slope(mu_grid, [&](cplx mu) { return pprime_bracket(mu, alpha, beta, rho); });
}

std::string scan_csv(const ResolventScan& scan) {
    std::ostringstream os;
    os << "lambda,norm\n";
    for (std::size_t i = 0; i < scan.lambda.size(); ++i)
        os << fmt_g17(scan.lambda[i]) << ',' << fmt_g17(scan.norm[i]) << '\n';
    return os.str();
}

nlohmann::json fit_summary(const ResolventScan& scan, const ExponentPrediction& pred) {
    nlohmann::json j;
    j["regime"] = to_string(scan.regime);
    j["exponent"] = scan.fit.exponent;
    j["r_squared"] = scan.fit.r_squared;
    j["stable_window"] = scan.stable_window;
    j["window"] = {{"lo_index", scan.fit.lo},
                   {"hi_index", scan.fit.hi},
                   {"lambda_lo", scan.lambda.at(scan.fit.lo)},
                   {"lambda_hi", scan.lambda.at(scan.fit.hi)}};
    j["theta_theoretical"] = pred.theta;
    j["upsilon_theoretical"] = pred.upsilon;
    j["upsilon_quoted_from_gamma_positive"] = pred.upsilon_quoted;
    j["decay_exponent_predicted"] = pred.decay_exponent;
    if (scan.regime == Regime::HighFrequency) j["informative_only"] = true;
    return j;
}

OracleLevel compare_with_oracle(const ProblemSpec& spec, double lambda, std::size_t nx, const OracleOptions& opt) {
    const auto alpha = spec.alpha();
    if (spec.variant() != Variant::P || !alpha) throw ConfigurationError("oracle comparison needs variant P with kappa = x^alpha");
    const auto op = assemble_operator(spec, build_x_grid(nx, opt.grade),
                                      build_xi_quadrature(spec.beta(), opt.nxi, opt.xi_min, opt.xi_max));
    const auto& nodes = op.xgrid().nodes;
    auto f = StateVector::zeros(op.nx(), op.nxi());
    for (std::size_t i = 0; i < nodes.size(); ++i) f.y[i] = opt.f1(nodes[i]);
    const auto yh = solve_resolvent(op, lambda, f);

    const auto x = with_origin(nodes);
    CVector f1(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) f1[i] = opt.f1(x[i]);
    const auto ref = analytic_resolvent_P(lambda, x, f1, 0.0, *alpha, spec.beta(), spec.rho());

    OracleLevel lv;
    lv.nx = nx;
    double e2 = 0.0, n2 = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double h = op.xgrid().widths[i];
        const double e = std::abs(yh.y[i] - ref.y[i + 1]);
        e2 += h * e * e;
        n2 += h * std::norm(ref.y[i + 1]);
        lv.linf_error = std::max(lv.linf_error, e);
    }
    lv.l2_error = std::sqrt(e2);
    lv.l2_norm = std::sqrt(n2);
    return lv;
}

OracleComparison oracle_refinement(const ProblemSpec& spec, double lambda, std::span<const std::size_t> nx_list,
                                   const OracleOptions& opt) {
    if (nx_list.empty()) throw InsufficientDataError("oracle refinement needs at least one level");
    OracleComparison c;
    c.lambda = lambda;
    for (std::size_t n : nx_list) c.levels.push_back(compare_with_oracle(spec, lambda, n, opt));
    if (c.levels.size() < 2) {
        c.observed_order = std::numeric_limits<double>::quiet_NaN();
        return c;
    }
    double mx = 0.0, my = 0.0;
    for (const auto& l : c.levels) {
        if (!(l.l2_error > 0.0)) {
            c.observed_order = std::numeric_limits<double>::quiet_NaN();
            return c;
        }
        mx += std::log(static_cast<double>(l.nx));
        my += std::log(l.l2_error);
    }
    const double n = static_cast<double>(c.levels.size());
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& l : c.levels) {
        const double dx = std::log(static_cast<double>(l.nx)) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(l.l2_error) - my);
    }
    c.observed_order = -sxy / sxx;
    return c;
}

std::string oracle_csv(const OracleComparison& c) {
    std::ostringstream os;
    os << "lambda,l2_error,linf_error,nx\n";
    for (const auto& l : c.levels)
        os << fmt_g17(c.lambda) << ',' << fmt_g17(l.l2_error) << ',' << fmt_g17(l.linf_error) << ',' << l.nx << '\n';
    return os.str();
}

} // namespace degschro
