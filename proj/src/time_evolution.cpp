#include "degschro/time_evolution.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "degschro/errors.hpp"
#include "degschro/io.hpp"

namespace degschro {

namespace {

cplx dot(const StateVector& a, const StateVector& b) {  // Euclidean, conj on b
    cplx s = 0.0;
    for (std::size_t i = 0; i < a.y.size(); ++i) s += a.y[i] * std::conj(b.y[i]);
    for (std::size_t k = 0; k < a.psi.size(); ++k) s += a.psi[k] * std::conj(b.psi[k]);
    return s;
}

double enorm(const StateVector& a) { return std::sqrt(std::abs(dot(a, a))); }

void axpy(cplx s, const StateVector& x, StateVector& y) {
    for (std::size_t i = 0; i < y.y.size(); ++i) y.y[i] += s * x.y[i];
    for (std::size_t k = 0; k < y.psi.size(); ++k) y.psi[k] += s * x.psi[k];
}

StateVector midstate(const StateVector& a, const StateVector& b) { return cplx(0.5) * (a + b); }

} // namespace

MidpointStepper::MidpointStepper(const SystemOperator& op, double dt)
    : op_(&op), dt_(dt), solver_([&]() -> ShiftedArrowSolver {
          if (!(dt > 0.0)) throw DomainError("dt", "must be positive");
          return ShiftedArrowSolver(op.matrix(), cplx(2.0 / dt));
      }()) {}

StateVector MidpointStepper::step(const StateVector& y) const {
    check_shape(y, op_->weights());
    StateVector rhs = op_->matrix().apply(y);
    axpy(cplx(2.0 / dt_), y, rhs);
    return solver_.solve(rhs);
}

StateVector step_implicit_midpoint(const SystemOperator& op, const StateVector& y, double dt) {
    return MidpointStepper(op, dt).step(y);
}

EnergyTrace simulate(const SystemOperator& op, const StateVector& y0, double t_final, double dt,
                     SimulateOptions options) {
    check_shape(y0, op.weights());
    if (!(t_final > 0.0)) throw DomainError("t_final", "must be positive");
    if (!(dt > 0.0) || dt > t_final) throw DomainError("dt", "must lie in (0, t_final]");
    const auto steps = static_cast<std::size_t>(std::llround(t_final / dt));
    if (steps == 0) throw DomainError("dt", "t_final / dt rounds to zero steps");
    const std::size_t every = std::max<std::size_t>(1, steps / std::max<std::size_t>(1, options.samples));

    const MidpointStepper stepper(op, dt);
    EnergyTrace tr;
    tr.dt = dt;
    tr.steps = steps;
    tr.max_step_increase = -INFINITY;
    StateVector y = y0;
    double e = energy(y, op), d = dissipation(op, y);
    auto record = [&](double t) {
        tr.t.push_back(t);
        tr.E.push_back(e);
        tr.D.push_back(d);
        tr.flux.push_back(boundary_flux(op, y));
    };
    record(0.0);
    for (std::size_t n = 1; n <= steps; ++n) {
        StateVector next = stepper.step(y);
        const double e1 = energy(next, op), d1 = dissipation(op, next);
        const double dm = dissipation(op, midstate(y, next));
        tr.max_step_increase = std::max(tr.max_step_increase, e1 - e);
        tr.balance_defect += std::abs(e1 - e - dt * 0.5 * (d + d1));
        tr.balance_defect_midstate += std::abs(e1 - e - dt * dm);
        y = std::move(next);
        e = e1;
        d = d1;
        if (n % every == 0 || n == steps) record(static_cast<double>(n) * dt);
    }
    return tr;
}

InitialPreset preset_from_string(const std::string& s) {
    if (s == "smooth-bump" || s == "SmoothBump") return InitialPreset::SmoothBump;
    if (s == "lowest-mode" || s == "LowestMode") return InitialPreset::LowestMode;
    if (s == "custom" || s == "Custom") return InitialPreset::Custom;
    if (s == "zero" || s == "Zero") return InitialPreset::Zero;
    throw DomainError("y0", "unknown initial preset '" + s + "'");
}

const char* to_string(InitialPreset p) {
    switch (p) {
    case InitialPreset::SmoothBump: return "smooth-bump";
    case InitialPreset::LowestMode: return "lowest-mode";
    case InitialPreset::Custom: return "custom";
    case InitialPreset::Zero: return "zero";
    }
    return "?";
}

std::vector<StateVector> near_kernel_modes(const SystemOperator& op, double threshold, std::size_t krylov_dim) {
    // Work with B = Ahat^H (Euclidean adjoint of the scaled matrix) and Krylov space of B^{-1}.
    const ArrowMatrix adj = op.scaled_matrix().adjoint();
    const std::size_t dim = op.dimension();
    const std::size_t m = std::min(krylov_dim, dim);
    std::optional<ShiftedArrowSolver> solver;
    try {
        solver.emplace(adj, cplx(0.0));
    } catch (const SpectralCollisionError&) {
        throw NumericalError("near-kernel search: A_h is exactly singular");
    }
    std::vector<StateVector> V;
    std::vector<cplx> H((m + 1) * m, 0.0);  // column-major (m+1) x m
    StateVector v = StateVector::zeros(op.nx(), op.nxi());
    for (std::size_t i = 0; i < op.nx(); ++i) v.y[i] = 1.0 + 0.1 * std::sin(1.7 * static_cast<double>(i));
    for (std::size_t k = 0; k < op.nxi(); ++k) v.psi[k] = 1.0 + 0.1 * std::cos(0.9 * static_cast<double>(k));
    v = cplx(1.0 / enorm(v)) * v;
    V.push_back(v);
    std::size_t built = 0;
    for (std::size_t j = 0; j < m; ++j) {
        StateVector w = cplx(-1.0) * solver->solve(V[j]);  // (0 I - B)^{-1} = -B^{-1}
        for (int pass = 0; pass < 2; ++pass)
            for (std::size_t i = 0; i <= j; ++i) {
                const cplx c = dot(w, V[i]);
                H[i + j * (m + 1)] += c;
                axpy(-c, V[i], w);
            }
        const double nw = enorm(w);
        H[(j + 1) + j * (m + 1)] = nw;
        built = j + 1;
        if (nw < 1e-14 * std::abs(H[j + j * (m + 1)]) || nw == 0.0) break;
        if (j + 1 < m) V.push_back(cplx(1.0 / nw) * w);
    }
    const std::size_t k = built;
    std::vector<cplx> Hk(k * k), ev(k), vr(k * k);
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t r = 0; r < k; ++r) Hk[r + c * k] = H[r + c * (m + 1)];
    const lapack_int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'V', static_cast<lapack_int>(k), Hk.data(),
                                          static_cast<lapack_int>(k), ev.data(), nullptr, 1, vr.data(),
                                          static_cast<lapack_int>(k));
    if (info != 0) throw NumericalError("near-kernel search: zgeev failed with info " + std::to_string(info));

    std::vector<StateVector> modes;
    for (std::size_t e = 0; e < k; ++e) {
        if (ev[e] == cplx(0.0)) continue;
        const cplx lam = 1.0 / ev[e];
        if (std::abs(lam) >= threshold) continue;
        StateVector u = StateVector::zeros(op.nx(), op.nxi());
        for (std::size_t c = 0; c < std::min(k, V.size()); ++c) axpy(vr[c + e * k], V[c], u);
        u = cplx(1.0 / enorm(u)) * u;
        StateVector r = cplx(-1.0) * solver->solve(u);
        axpy(-ev[e], u, r);
        if (enorm(r) > 1e-6 * std::abs(ev[e]))
            throw NumericalError("near-kernel search: Ritz vector for eigenvalue of modulus " +
                                 std::to_string(std::abs(lam)) + " did not converge");
        // Gram-Schmidt against earlier modes (Euclidean in scaled coordinates = H inner product)
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : modes) axpy(-dot(u, q), q, u);
        const double nu = enorm(u);
        if (nu < 1e-8) continue;
        u = cplx(1.0 / nu) * u;
        modes.push_back(std::move(u));
    }
    for (auto& q : modes) q = op.from_scaled(q);
    return modes;
}

StateVector project_out(const StateVector& y, const std::vector<StateVector>& modes, const HilbertWeights& w) {
    StateVector r = y;
    for (const auto& q : modes) axpy(-inner_product(r, q, w), q, r);
    return r;
}

EigenPair lowest_mode(const SystemOperator& op) {
    const std::size_t n = op.nx();
    // Undamped y block in symmetric form: -i T, scaled by sqrt(h).
    const ArrowMatrix& s = op.scaled_matrix();
    std::vector<double> d(n), e(n > 1 ? n - 1 : 1);
    for (std::size_t i = 0; i < n; ++i) d[i] = (s.diag[i] / cplx(0.0, 1.0)).real();
    for (std::size_t i = 0; i + 1 < n; ++i) e[i] = (s.upper[i] / cplx(0.0, 1.0)).real();
    if (LAPACKE_dsterf(static_cast<lapack_int>(n), d.data(), e.data()) != 0)
        throw NumericalError("lowest_mode: dsterf failed");
    // eigenvalues are -omega^2 in ascending order; want the smallest omega^2 clearly above 0
    const double scale = std::max(1.0, std::abs(d.front()));
    double omega2 = -1.0;
    for (auto it = d.rbegin(); it != d.rend(); ++it)
        if (-*it > 1e-8 * scale) {
            omega2 = -*it;
            break;
        }
    if (omega2 < 0.0) throw NumericalError("lowest_mode: no nonzero undamped frequency");

    const ArrowMatrix& A = op.matrix();
    const auto& w = op.weights();
    cplx shift(0.0, -omega2);
    StateVector v = StateVector::zeros(n, op.nxi());
    for (std::size_t i = 0; i < n; ++i) v.y[i] = std::cos(std::sqrt(omega2) * op.xgrid().nodes[i]);
    v = cplx(1.0 / norm(v, w)) * v;
    EigenPair best{shift, v, INFINITY};
    for (int it = 0; it < 200; ++it) {
        const ShiftedArrowSolver solver(A, shift);
        for (int inner = 0; inner < 3; ++inner) {
            v = solver.solve(v);
            v = cplx(1.0 / norm(v, w)) * v;
        }
        const StateVector av = A.apply(v);
        const cplx rq = inner_product(av, v, w);
        const double res = norm(av - rq * v, w);
        if (res < best.residual) best = {rq, v, res};
        if (res < 1e-11 * std::max(1.0, std::abs(rq))) break;
        shift = rq + cplx(1e-9 * std::max(1.0, std::abs(rq)), 0.0);  // keep the factorization regular
    }
    if (!(best.residual < 1e-8)) throw NumericalError("lowest_mode: eigen-iteration did not converge");
    return best;
}

StateVector prepare_initial_state(const SystemOperator& op, InitialPreset preset,
                                  const InitialStateOptions& options) {
    const std::size_t n = op.nx();
    StateVector y = StateVector::zeros(n, op.nxi());
    if (preset == InitialPreset::Zero) return y;
    const auto& x = op.xgrid().nodes;
    switch (preset) {
    case InitialPreset::SmoothBump:
        for (std::size_t i = 0; i < n; ++i) y.y[i] = x[i] * x[i] * (1.0 - x[i]) * (1.0 - x[i]);
        break;
    case InitialPreset::Custom:
        if (!options.custom) throw ConfigurationError("custom initial state requires a profile");
        for (std::size_t i = 0; i < n; ++i) y.y[i] = options.custom(x[i]);
        break;
    case InitialPreset::LowestMode:
        y = lowest_mode(op).vector;
        break;
    case InitialPreset::Zero:
        break;
    }
    y = project_out(y, near_kernel_modes(op, options.kernel_threshold, options.krylov_dim), op.weights());
    const double e = energy(y, op);
    if (!(e > 0.0)) throw DegenerateDataError("initial state vanishes after near-kernel projection");
    return cplx(1.0 / std::sqrt(e)) * y;
}

DecayFit fit_decay_exponent(const EnergyTrace& trace, double t_lo, double t_hi) {
    if (trace.t.empty()) throw InsufficientDataError("empty energy trace");
    if (!(t_lo > 0.0 && t_lo < t_hi)) throw RangeError("window", "need 0 < t_lo < t_hi");
    if (t_lo < trace.t.front() || t_hi > trace.t.back() * (1.0 + 1e-12))
        throw RangeError("window", "fit window lies outside the trace span");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < trace.t.size(); ++i) {
        if (trace.t[i] < t_lo || trace.t[i] > t_hi) continue;
        if (!(trace.E[i] > 0.0))
            throw DegenerateDataError("energy is not positive at t = " + std::to_string(trace.t[i]));
        lx.push_back(std::log(trace.t[i]));
        ly.push_back(std::log(trace.E[i]));
    }
    if (lx.size() < 20)
        throw InsufficientDataError("only " + std::to_string(lx.size()) + " samples in fit window, need 20");
    const double nn = static_cast<double>(lx.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= nn;
    my /= nn;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    DecayFit f;
    f.t_lo = t_lo;
    f.t_hi = t_hi;
    f.samples = lx.size();
    const double slope = sxy / sxx;
    f.exponent = -slope;
    f.intercept = my - slope * mx;
    f.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
    return f;
}

std::string trace_csv(const EnergyTrace& trace) {
    std::ostringstream os;
    os << "t,E,D,flux_re,flux_im\n";
    for (std::size_t i = 0; i < trace.t.size(); ++i)
        os << fmt_g17(trace.t[i]) << ',' << fmt_g17(trace.E[i]) << ',' << fmt_g17(trace.D[i]) << ','
           << fmt_g17(trace.flux[i].real()) << ',' << fmt_g17(trace.flux[i].imag()) << '\n';
    return os.str();
}

} // namespace degschro
