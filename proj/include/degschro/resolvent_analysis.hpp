#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "degschro/arrow_matrix.hpp"
#include "degschro/spatial_discretization.hpp"
#include "json.hpp"

namespace degschro {

enum class Regime { NearZero, HighFrequency };

const char* to_string(Regime r);
Regime regime_from_string(const std::string& s);

struct PowerFit {
    double exponent = 0.0;  // slope of log norm vs log |lambda|
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t lo = 0;  // inclusive index range of the fitted window
    std::size_t hi = 0;
};

struct ResolventScan {
    std::vector<double> lambda;
    std::vector<double> norm;
    Regime regime = Regime::NearZero;
    PowerFit fit;
    /// false when no window met the slope-stability rule and the whole range was fitted.
    bool stable_window = true;
};

struct ExponentPrediction {
    double theta = 1.0;
    double upsilon = 0.0;
    double varsigma = 1.0;
    double decay_exponent = 2.0;
    /// true when upsilon is carried over from the gamma > 0 theory rather than proved for gamma = 0.
    bool upsilon_quoted = false;
};

struct NormOptions {
    /// relative residual of the Lanczos eigenpair of M^{-H} M^{-1}, or relative change of
    /// the top Ritz value over 5 consecutive steps
    double tol = 1e-10;
    std::size_t max_iter = 200;   // total operator applications
    std::size_t restart = 60;     // basis size before an explicit restart
};

struct NormResult {
    double norm = 0.0;
    std::size_t iterations = 0;
    double residual = 0.0;
};

/// ||(i lambda - A)^{-1}||_2 for a matrix in Euclidean coordinates: Lanczos with full
/// reorthogonalization on M^{-H} M^{-1}, both factors from the arrow factorization.
NormResult resolvent_norm_euclidean(const ArrowMatrix& a, double lambda, const NormOptions& opt = {});

/// Same in the H norm of the operator.
double resolvent_norm(const SystemOperator& op, double lambda, const NormOptions& opt = {});

/// Y with (i lambda - A_h) Y = F.
StateVector solve_resolvent(const SystemOperator& op, double lambda, const StateVector& f);

/// Least squares of log norm against log |lambda| on [lo, hi].
PowerFit fit_power_law(std::span<const double> lambda, std::span<const double> norm, std::size_t lo,
                       std::size_t hi);

/// Largest contiguous window (>= min_points) on which the local log-log slopes stay within
/// 10% of their mean; ties go to the end nearer the asymptotic regime.
PowerFit fit_power_law_auto(std::span<const double> lambda, std::span<const double> norm, Regime regime,
                            std::size_t min_points = 8);

std::vector<double> log_space(double lo, double hi, std::size_t n);

/// Norms evaluated concurrently (threads = 0: hardware concurrency); output order is the
/// input order, so results do not depend on scheduling.
ResolventScan scan_resolvent(const SystemOperator& op, std::span<const double> lambdas, Regime regime,
                             std::size_t threads = 0, const NormOptions& opt = {});

ResolventScan scan_from_norms(std::span<const double> lambdas, std::span<const double> norms, Regime regime);

ExponentPrediction theoretical_exponents(const ProblemSpec& spec);

struct ScalingFit {
    double slope = 0.0;
    double r_squared = 0.0;
};

/// Slope of log|D| against log|mu| for the variant P connection determinant.
ScalingFit verify_determinant_scaling(double alpha, double beta, double rho, std::span<const cplx> mu_grid);

/// Slope of log|bracket| against log|mu| for variant P' with kappa = x^alpha.
ScalingFit verify_pprime_bracket_scaling(double alpha, double beta, double rho, std::span<const cplx> mu_grid);

struct OracleOptions {
    double grade = 3.0;
    std::size_t nxi = kDefaultNxi;
    double xi_min = kDefaultXiMin;
    double xi_max = kDefaultXiMax;
    /// y-component of the right-hand side; the psi component is zero.
    std::function<cplx(double)> f1 = [](double) { return cplx(1.0); };
};

struct OracleLevel {
    std::size_t nx = 0;
    double l2_error = 0.0;    // sqrt(sum h_i |y_h(x_i) - y(x_i)|^2)
    double linf_error = 0.0;
    double l2_norm = 0.0;     // of the analytic solution, same weights
};

struct OracleComparison {
    double lambda = 0.0;
    std::vector<OracleLevel> levels;
    /// -slope of log l2_error against log nx; NaN when an error vanishes.
    double observed_order = 0.0;
};

/// Discrete resolvent solve against the closed form for variant P with kappa = x^alpha.
OracleLevel compare_with_oracle(const ProblemSpec& spec, double lambda, std::size_t nx,
                                const OracleOptions& opt = {});
OracleComparison oracle_refinement(const ProblemSpec& spec, double lambda, std::span<const std::size_t> nx_list,
                                   const OracleOptions& opt = {});

/// CSV with header lambda,l2_error,linf_error,nx.
std::string oracle_csv(const OracleComparison& c);

/// CSV with header lambda,norm.
std::string scan_csv(const ResolventScan& scan);
nlohmann::json fit_summary(const ResolventScan& scan, const ExponentPrediction& pred);

} // namespace degschro
