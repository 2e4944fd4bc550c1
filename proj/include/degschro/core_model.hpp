#pragma once

// Problem configuration for the two degenerate Schrodinger systems with
// fractional-integral boundary damping:
//
//   P : y_t - i (x^alpha y_x)_x = 0,  (x^alpha y_x)(0) = -i rho d^{beta,gamma} y(0),  y_x(1) = 0
//   P': y_t - i (kappa y_x)_x = 0,    (kappa y_x)(1) =  i rho d^{beta,gamma} y(1),
//       y(0) = 0 if m_kappa < 1, (kappa y_x)(0) = 0 if 1 <= m_kappa < 2
//
// plus the state vector and the weighted inner product shared by every module.

#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace degschro {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;

enum class Variant { P, Pprime };

/// kappa(x) = x^alpha.
struct PowerLaw {
    double alpha;
};

/// kappa sampled at strictly increasing points of (0, 1]; interpolated log-log.
struct Tabulated {
    std::vector<double> x;
    std::vector<double> kappa;
};

using Kappa = std::variant<PowerLaw, Tabulated>;

enum class BoundaryClass {
    DirichletAtZero,       // 0 <= m_kappa < 1
    WeightedNeumannAtZero  // 1 <= m_kappa < 2
};

struct DegeneracyReport {
    double m_kappa = 0.0;
    BoundaryClass boundary_class = BoundaryClass::DirichletAtZero;
    double sup_location = 1.0;
};

struct DerivedConstants {
    double zeta = 0.0;
    std::optional<double> nu_alpha;
};

/// zeta = rho sin(beta pi) / pi and, when alpha is given, nu_alpha = (1 - alpha) / (2 - alpha).
/// Throws DomainError naming the offending parameter.
DerivedConstants derive_constants(double beta, double rho, std::optional<double> alpha = {});

/// m_kappa = sup_{0<x<=1} x |kappa'(x)| / kappa(x). Exact for PowerLaw; for Tabulated the
/// maximum over interior samples with centred differences (no interpolation refinement).
DegeneracyReport classify_kappa(const Kappa& kappa);

double kappa_value(const Kappa& kappa, double x);

/// Samples f at n log-spaced points of [x_min, 1].
Tabulated tabulate_kappa(const std::function<double(double)>& f, std::size_t n, double x_min = 1e-8);

/// Immutable validated configuration. Derived constants are recomputed on construction
/// and never serialized.
class ProblemSpec {
public:
    ProblemSpec(Variant variant, Kappa kappa, double beta, double rho, double gamma = 0.0);

    Variant variant() const noexcept { return variant_; }
    const Kappa& kappa() const noexcept { return kappa_; }
    double beta() const noexcept { return beta_; }
    double rho() const noexcept { return rho_; }
    double gamma() const noexcept { return gamma_; }
    double zeta() const noexcept { return zeta_; }
    std::optional<double> nu_alpha() const noexcept { return nu_alpha_; }
    double m_kappa() const noexcept { return degeneracy_.m_kappa; }
    const DegeneracyReport& degeneracy() const noexcept { return degeneracy_; }

    /// alpha when kappa is a power law.
    std::optional<double> alpha() const noexcept;
    double kappa_at(double x) const { return kappa_value(kappa_, x); }

    /// Throws ConfigurationError unless gamma == 0 (stability-facing operations only).
    void require_undamped_kernel() const;

private:
    Variant variant_;
    Kappa kappa_;
    double beta_;
    double rho_;
    double gamma_;
    double zeta_ = 0.0;
    std::optional<double> nu_alpha_;
    DegeneracyReport degeneracy_;
};

nlohmann::json to_json(const ProblemSpec& spec);
ProblemSpec problem_spec_from_json(const nlohmann::json& j);

const char* to_string(Variant v);
Variant variant_from_string(const std::string& s);
const char* to_string(BoundaryClass c);

/// One point (y, psi) of the discrete Hilbert space.
struct StateVector {
    CVector y;
    CVector psi;

    static StateVector zeros(std::size_t nx, std::size_t nxi) { return {CVector(nx), CVector(nxi)}; }
    std::size_t size() const noexcept { return y.size() + psi.size(); }
};

StateVector operator+(const StateVector& a, const StateVector& b);
StateVector operator-(const StateVector& a, const StateVector& b);
StateVector operator*(cplx s, const StateVector& a);

/// Quadrature weights of the discrete scalar product:
///   <Y, Z>_H = sum_i h_i y_i conj(z_i) + sum_k (zeta w_k) psi_k conj(phi_k).
struct HilbertWeights {
    std::vector<double> y;    // h_i
    std::vector<double> psi;  // zeta w_k
};

cplx inner_product(const StateVector& a, const StateVector& b, const HilbertWeights& w);
double norm(const StateVector& a, const HilbertWeights& w);

/// E = 1/2 sum h_i |y_i|^2 + zeta/2 sum w_k |psi_k|^2.
double energy(const StateVector& state, const HilbertWeights& w);

void check_shape(const StateVector& state, const HilbertWeights& w);

} // namespace degschro
