#include "degschro/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "degschro/errors.hpp"

namespace degschro {

namespace {

void require_finite(const char* name, double v) {
    if (!std::isfinite(v)) throw DomainError(name, "must be finite");
}

void validate_tabulated(const Tabulated& t) {
    if (t.x.size() != t.kappa.size())
        throw ShapeError("kappa samples: x and kappa lengths differ");
    if (t.x.size() < 3)
        throw InvalidCoefficientError("kappa samples: at least 3 samples are required");
    for (std::size_t i = 0; i < t.x.size(); ++i) {
        if (!(t.x[i] > 0.0) || t.x[i] > 1.0)
            throw InvalidCoefficientError("kappa samples: x must lie in (0, 1]");
        if (i > 0 && !(t.x[i] > t.x[i - 1]))
            throw InvalidCoefficientError("kappa samples: x must be strictly increasing");
        if (!(t.kappa[i] > 0.0) || !std::isfinite(t.kappa[i]))
            throw InvalidCoefficientError("kappa samples: kappa must be positive on (0,1], got " +
                                          std::to_string(t.kappa[i]) + " at x=" + std::to_string(t.x[i]));
    }
}

} // namespace

DerivedConstants derive_constants(double beta, double rho, std::optional<double> alpha) {
    require_finite("beta", beta);
    require_finite("rho", rho);
    if (!(beta > 0.0 && beta < 1.0)) throw DomainError("beta", "must lie in (0, 1)");
    if (!(rho > 0.0)) throw DomainError("rho", "must be positive");
    DerivedConstants c;
    c.zeta = rho * std::sin(beta * std::numbers::pi) / std::numbers::pi;
    if (alpha) {
        require_finite("alpha", *alpha);
        if (!(*alpha > 0.0 && *alpha < 1.0)) throw DomainError("alpha", "must lie in (0, 1)");
        c.nu_alpha = (1.0 - *alpha) / (2.0 - *alpha);
    }
    return c;
}

DegeneracyReport classify_kappa(const Kappa& kappa) {
    DegeneracyReport r;
    if (const auto* p = std::get_if<PowerLaw>(&kappa)) {
        require_finite("alpha", p->alpha);
        if (!(p->alpha > 0.0)) throw DomainError("alpha", "must be positive (kappa(0) = 0)");
        r.m_kappa = p->alpha;
        r.sup_location = 1.0;  // x kappa'/kappa is constant
    } else {
        const auto& t = std::get<Tabulated>(kappa);
        validate_tabulated(t);
        double best = -1.0;
        for (std::size_t i = 1; i + 1 < t.x.size(); ++i) {
            const double dk = (t.kappa[i + 1] - t.kappa[i - 1]) / (t.x[i + 1] - t.x[i - 1]);
            const double m = t.x[i] * std::abs(dk) / t.kappa[i];
            if (m > best) {
                best = m;
                r.sup_location = t.x[i];
            }
        }
        r.m_kappa = best;
    }
    if (!(r.m_kappa < 2.0))
        throw HypothesisViolationError("m_kappa = " + std::to_string(r.m_kappa) + " violates m_kappa < 2");
    r.boundary_class = r.m_kappa < 1.0 ? BoundaryClass::DirichletAtZero : BoundaryClass::WeightedNeumannAtZero;
    return r;
}

double kappa_value(const Kappa& kappa, double x) {
    if (const auto* p = std::get_if<PowerLaw>(&kappa)) return std::pow(x, p->alpha);
    const auto& t = std::get<Tabulated>(kappa);
    if (x <= 0.0) return 0.0;
    const std::size_t n = t.x.size();
    // segment [i, i+1] containing x, clamped to the end segments for extrapolation
    std::size_t i;
    if (x <= t.x.front()) {
        i = 0;
    } else if (x >= t.x.back()) {
        i = n - 2;
    } else {
        i = static_cast<std::size_t>(std::upper_bound(t.x.begin(), t.x.end(), x) - t.x.begin()) - 1;
        i = std::min(i, n - 2);
    }
    const double lx0 = std::log(t.x[i]), lx1 = std::log(t.x[i + 1]);
    const double lk0 = std::log(t.kappa[i]), lk1 = std::log(t.kappa[i + 1]);
    const double s = (lk1 - lk0) / (lx1 - lx0);
    return std::exp(lk0 + s * (std::log(x) - lx0));
}

Tabulated tabulate_kappa(const std::function<double(double)>& f, std::size_t n, double x_min) {
    if (n < 3) throw DomainError("n", "need at least 3 samples");
    if (!(x_min > 0.0 && x_min < 1.0)) throw DomainError("x_min", "must lie in (0, 1)");
    Tabulated t;
    t.x.resize(n);
    t.kappa.resize(n);
    const double l0 = std::log(x_min);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = i + 1 == n ? 1.0 : std::exp(l0 * (1.0 - static_cast<double>(i) / (n - 1)));
        t.x[i] = x;
        t.kappa[i] = f(x);
    }
    return t;
}

ProblemSpec::ProblemSpec(Variant variant, Kappa kappa, double beta, double rho, double gamma)
    : variant_(variant), kappa_(std::move(kappa)), beta_(beta), rho_(rho), gamma_(gamma) {
    require_finite("gamma", gamma);
    if (gamma < 0.0) throw DomainError("gamma", "must be nonnegative");
    zeta_ = derive_constants(beta, rho).zeta;

    if (const auto* p = std::get_if<PowerLaw>(&kappa_)) {
        require_finite("alpha", p->alpha);
        if (!(p->alpha > 0.0 && p->alpha < 2.0)) throw DomainError("alpha", "must lie in (0, 2)");
        if (variant_ == Variant::P && p->alpha >= 1.0)
            throw ConfigurationError("variant P requires kappa = x^alpha with alpha in (0, 1), got alpha = " +
                                     std::to_string(p->alpha));
        if (p->alpha < 1.0) nu_alpha_ = (1.0 - p->alpha) / (2.0 - p->alpha);
    } else if (variant_ == Variant::P) {
        throw ConfigurationError("variant P requires a power-law kappa (--alpha)");
    }
    degeneracy_ = classify_kappa(kappa_);
}

std::optional<double> ProblemSpec::alpha() const noexcept {
    if (const auto* p = std::get_if<PowerLaw>(&kappa_)) return p->alpha;
    return std::nullopt;
}

void ProblemSpec::require_undamped_kernel() const {
    if (gamma_ != 0.0)
        throw ConfigurationError("stability analysis is only defined for gamma = 0 (got gamma = " +
                                 std::to_string(gamma_) + ")");
}

const char* to_string(Variant v) { return v == Variant::P ? "P" : "Pprime"; }

Variant variant_from_string(const std::string& s) {
    if (s == "P") return Variant::P;
    if (s == "Pprime" || s == "P'") return Variant::Pprime;
    throw DomainError("variant", "expected P or Pprime, got '" + s + "'");
}

const char* to_string(BoundaryClass c) {
    return c == BoundaryClass::DirichletAtZero ? "DirichletAtZero" : "WeightedNeumannAtZero";
}

nlohmann::json to_json(const ProblemSpec& spec) {
    nlohmann::json j;
    j["variant"] = to_string(spec.variant());
    if (const auto a = spec.alpha()) {
        j["alpha"] = *a;
    } else {
        const auto& t = std::get<Tabulated>(spec.kappa());
        auto samples = nlohmann::json::array();
        for (std::size_t i = 0; i < t.x.size(); ++i) samples.push_back({t.x[i], t.kappa[i]});
        j["kappa_samples"] = samples;
    }
    j["beta"] = spec.beta();
    j["rho"] = spec.rho();
    j["gamma"] = spec.gamma();
    return j;
}

ProblemSpec problem_spec_from_json(const nlohmann::json& j) {
    try {
        const Variant v = variant_from_string(j.at("variant").get<std::string>());
        Kappa kappa;
        const bool has_alpha = j.contains("alpha");
        const bool has_samples = j.contains("kappa_samples");
        if (has_alpha == has_samples)
            throw ConfigurationError("ProblemSpec JSON needs exactly one of 'alpha' or 'kappa_samples'");
        if (has_alpha) {
            kappa = PowerLaw{j.at("alpha").get<double>()};
        } else {
            Tabulated t;
            for (const auto& s : j.at("kappa_samples")) {
                t.x.push_back(s.at(0).get<double>());
                t.kappa.push_back(s.at(1).get<double>());
            }
            kappa = std::move(t);
        }
        const double gamma = j.value("gamma", 0.0);
        return ProblemSpec(v, std::move(kappa), j.at("beta").get<double>(), j.at("rho").get<double>(), gamma);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigurationError(std::string("malformed ProblemSpec JSON: ") + e.what());
    }
}

StateVector operator+(const StateVector& a, const StateVector& b) {
    if (a.y.size() != b.y.size() || a.psi.size() != b.psi.size()) throw ShapeError("state size mismatch");
    StateVector r = a;
    for (std::size_t i = 0; i < r.y.size(); ++i) r.y[i] += b.y[i];
    for (std::size_t k = 0; k < r.psi.size(); ++k) r.psi[k] += b.psi[k];
    return r;
}

StateVector operator-(const StateVector& a, const StateVector& b) { return a + cplx(-1.0) * b; }

StateVector operator*(cplx s, const StateVector& a) {
    StateVector r = a;
    for (auto& v : r.y) v *= s;
    for (auto& v : r.psi) v *= s;
    return r;
}

void check_shape(const StateVector& state, const HilbertWeights& w) {
    if (state.y.size() != w.y.size() || state.psi.size() != w.psi.size())
        throw ShapeError("state has shape (" + std::to_string(state.y.size()) + ", " +
                         std::to_string(state.psi.size()) + "), grids expect (" + std::to_string(w.y.size()) +
                         ", " + std::to_string(w.psi.size()) + ")");
}

cplx inner_product(const StateVector& a, const StateVector& b, const HilbertWeights& w) {
    check_shape(a, w);
    check_shape(b, w);
    cplx s = 0.0;
    for (std::size_t i = 0; i < a.y.size(); ++i) s += w.y[i] * a.y[i] * std::conj(b.y[i]);
    for (std::size_t k = 0; k < a.psi.size(); ++k) s += w.psi[k] * a.psi[k] * std::conj(b.psi[k]);
    return s;
}

double norm(const StateVector& a, const HilbertWeights& w) { return std::sqrt(2.0 * energy(a, w)); }

double energy(const StateVector& state, const HilbertWeights& w) {
    check_shape(state, w);
    double e = 0.0;
    for (std::size_t i = 0; i < state.y.size(); ++i) e += w.y[i] * std::norm(state.y[i]);
    for (std::size_t k = 0; k < state.psi.size(); ++k) e += w.psi[k] * std::norm(state.psi[k]);
    return 0.5 * e;
}

} // namespace degschro
