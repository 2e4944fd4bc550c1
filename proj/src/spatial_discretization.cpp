#include "degschro/spatial_discretization.hpp"

#include <cmath>
#include <sstream>

#include "degschro/errors.hpp"
#include "degschro/io.hpp"

namespace degschro {

XGrid build_x_grid(std::size_t n, double g) {
    if (n < 2) throw RangeError("nx", "at least 2 nodes are required");
    if (!(g >= 1.0 && g <= 4.0)) throw RangeError("grade", "must lie in [1, 4]");
    XGrid x;
    x.grade = g;
    x.nodes.resize(n);
    x.widths.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        x.nodes[i] = i + 1 == n ? 1.0 : std::pow(static_cast<double>(i + 1) / static_cast<double>(n), g);
    x.widths[0] = 0.5 * (x.nodes[0] + x.nodes[1]);
    for (std::size_t i = 1; i + 1 < n; ++i) x.widths[i] = 0.5 * (x.nodes[i + 1] - x.nodes[i - 1]);
    x.widths[n - 1] = 0.5 * (x.nodes[n - 1] - x.nodes[n - 2]);
    return x;
}

double default_grade(const ProblemSpec& spec) {
    const auto a = spec.alpha();
    if ((a && *a >= 1.0) || spec.m_kappa() >= 1.0) return 2.0;
    return 1.0;
}

SystemOperator::SystemOperator(ProblemSpec spec, XGrid xgrid, XiGrid xigrid, ArrowMatrix a, bool damped)
    : spec_(std::move(spec)), xgrid_(std::move(xgrid)), xigrid_(std::move(xigrid)), a_(std::move(a)),
      damped_(damped) {
    a_.validate();
    if (a_.ny() != xgrid_.size() || a_.npsi() != xigrid_.size())
        throw ShapeError("system operator: matrix does not match grids");
    const double z = effective_zeta();
    weights_.y = xgrid_.widths;
    weights_.psi.resize(nxi());
    sy_.resize(nx());
    sp_.resize(nxi());
    for (std::size_t i = 0; i < nx(); ++i) sy_[i] = std::sqrt(weights_.y[i]);
    for (std::size_t k = 0; k < nxi(); ++k) {
        weights_.psi[k] = z * xigrid_.weights[k];
        sp_[k] = std::sqrt(z > 0.0 ? weights_.psi[k] : xigrid_.weights[k]);
    }
    scaled_ = a_.similarity(sy_, sp_);
}

StateVector SystemOperator::to_scaled(const StateVector& s) const {
    check_shape(s, weights_);
    StateVector r = s;
    for (std::size_t i = 0; i < nx(); ++i) r.y[i] *= sy_[i];
    for (std::size_t k = 0; k < nxi(); ++k) r.psi[k] *= sp_[k];
    return r;
}

StateVector SystemOperator::from_scaled(const StateVector& s) const {
    check_shape(s, weights_);
    StateVector r = s;
    for (std::size_t i = 0; i < nx(); ++i) r.y[i] /= sy_[i];
    for (std::size_t k = 0; k < nxi(); ++k) r.psi[k] /= sp_[k];
    return r;
}

SystemOperator assemble_operator(const ProblemSpec& spec, const XGrid& xg, const XiGrid& xig,
                                 AssembleOptions options) {
    spec.require_undamped_kernel();
    if (spec.variant() == Variant::P) {
        const auto a = spec.alpha();
        if (!a || !(*a > 0.0 && *a < 1.0))
            throw ConfigurationError("variant P requires kappa = x^alpha with alpha in (0, 1)");
    }
    if (std::abs(xig.beta - spec.beta()) > 1e-15)
        throw ConfigurationError("xi grid was built for beta = " + std::to_string(xig.beta) +
                                 ", problem has beta = " + std::to_string(spec.beta()));
    const std::size_t n = xg.size(), m = xig.size();
    if (n < 2) throw ShapeError("x grid needs at least 2 nodes");
    const cplx I(0.0, 1.0);
    const auto& x = xg.nodes;
    const auto& h = xg.widths;

    ArrowMatrix A;
    A.diag.assign(n, 0.0);
    A.lower.assign(n - 1, 0.0);
    A.upper.assign(n - 1, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double c = spec.kappa_at(0.5 * (x[i] + x[i + 1])) / (x[i + 1] - x[i]);
        A.upper[i] = I * c / h[i];
        A.diag[i] -= I * c / h[i];
        A.lower[i] = I * c / h[i + 1];
        A.diag[i + 1] -= I * c / h[i + 1];
    }
    if (spec.variant() == Variant::Pprime && spec.degeneracy().boundary_class == BoundaryClass::DirichletAtZero)
        A.diag[0] -= I * spec.kappa_at(0.5 * x[0]) / (x[0] * h[0]);

    A.boundary = spec.variant() == Variant::P ? 0 : n - 1;
    const double zeta = options.damped ? spec.zeta() : 0.0;
    A.psi_diag.resize(m);
    A.row_coupling.resize(m);
    A.col_coupling.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
        A.psi_diag[k] = -xig.nodes[k] * xig.nodes[k];
        A.row_coupling[k] = -zeta * xig.weights[k] * xig.eta[k] / h[A.boundary];
        A.col_coupling[k] = xig.eta[k];
    }
    return SystemOperator(spec, xg, xig, std::move(A), options.damped);
}

StateVector apply_operator(const SystemOperator& op, const StateVector& state) {
    check_shape(state, op.weights());
    return op.matrix().apply(state);
}

double energy(const StateVector& state, const SystemOperator& op) { return energy(state, op.weights()); }

double dissipation(const SystemOperator& op, const StateVector& state) {
    check_shape(state, op.weights());
    const auto& g = op.xigrid();
    double s = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) s += g.weights[k] * g.nodes[k] * g.nodes[k] * std::norm(state.psi[k]);
    return s == 0.0 ? 0.0 : -op.effective_zeta() * s;
}

cplx boundary_flux(const SystemOperator& op, const StateVector& state) {
    check_shape(state, op.weights());
    const auto& g = op.xigrid();
    cplx s = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) s += g.weights[k] * g.eta[k] * state.psi[k];
    return op.effective_zeta() * s;
}

std::string export_coo(const SystemOperator& op) {
    const ArrowMatrix& a = op.matrix();
    const std::size_t n = a.ny();
    std::ostringstream os;
    auto put = [&](std::size_t r, std::size_t c, cplx v) {
        if (v != cplx(0.0)) os << r << ' ' << c << ' ' << fmt_g17(v.real()) << ' ' << fmt_g17(v.imag()) << '\n';
    };
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) put(i, i - 1, a.lower[i - 1]);
        put(i, i, a.diag[i]);
        if (i + 1 < n) put(i, i + 1, a.upper[i]);
        if (i == a.boundary)
            for (std::size_t k = 0; k < a.npsi(); ++k) put(i, n + k, a.row_coupling[k]);
    }
    for (std::size_t k = 0; k < a.npsi(); ++k) {
        put(n + k, a.boundary, a.col_coupling[k]);
        put(n + k, n + k, a.psi_diag[k]);
    }
    return os.str();
}

nlohmann::json operator_metadata(const SystemOperator& op) {
    return {{"problem", to_json(op.problem())},
            {"nx", op.nx()},
            {"grade", op.xgrid().grade},
            {"nxi", op.nxi()},
            {"xi_min", op.xigrid().xi_min},
            {"xi_max", op.xigrid().xi_max},
            {"damped", op.damped()},
            {"boundary_index", op.boundary_index()},
            {"dimension", op.dimension()},
            {"ordering", "y[0..nx), psi[0..nxi)"},
            {"format", "row col re im"}};
}

} // namespace degschro
