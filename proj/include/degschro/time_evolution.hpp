#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "degschro/arrow_matrix.hpp"
#include "degschro/spatial_discretization.hpp"

namespace degschro {

struct EnergyTrace {
    std::vector<double> t;
    std::vector<double> E;
    std::vector<double> D;
    CVector flux;
    std::size_t steps = 0;
    double dt = 0.0;
    /// max over all steps of E_{n+1} - E_n (<= 0 up to roundoff for a dissipative operator).
    double max_step_increase = 0.0;
    /// sum over steps of |E_{n+1} - E_n - dt (D_n + D_{n+1})/2|; O(dt^2) overall.
    double balance_defect = 0.0;
    /// same with D evaluated at the midpoint state (Y_n + Y_{n+1})/2; roundoff level.
    double balance_defect_midstate = 0.0;
};

struct DecayFit {
    double t_lo = 0.0;
    double t_hi = 0.0;
    double exponent = 0.0;   // E ~ t^{-exponent}
    double intercept = 0.0;  // of log E vs log t
    double r_squared = 0.0;
    std::size_t samples = 0;
};

/// (I - dt/2 A) Y' = (I + dt/2 A) Y, with the shifted operator factored once.
class MidpointStepper {
public:
    MidpointStepper(const SystemOperator& op, double dt);
    StateVector step(const StateVector& y) const;
    double dt() const noexcept { return dt_; }

private:
    const SystemOperator* op_;
    double dt_;
    ShiftedArrowSolver solver_;
};

StateVector step_implicit_midpoint(const SystemOperator& op, const StateVector& y, double dt);

struct SimulateOptions {
    /// Number of uniformly spaced trace samples after t = 0 (the step count is
    /// rounded down to a multiple of the cadence; the final time is always recorded).
    std::size_t samples = 2000;
};

EnergyTrace simulate(const SystemOperator& op, const StateVector& y0, double t_final, double dt,
                     SimulateOptions options = {});

enum class InitialPreset { SmoothBump, LowestMode, Custom, Zero };

InitialPreset preset_from_string(const std::string& s);
const char* to_string(InitialPreset p);

struct InitialStateOptions {
    /// Used by Custom: y values at the x nodes (psi starts at 0).
    std::function<cplx(double)> custom;
    double kernel_threshold = 1e-8;
    std::size_t krylov_dim = 60;
};

/// SmoothBump: y = x^2 (1-x)^2, psi = 0. LowestMode: eigenvector of A_h continuing the
/// lowest nonconstant undamped y-mode. Custom: user profile, psi = 0. All presets other
/// than Zero are then stripped of near-kernel components and scaled to E = 1.
StateVector prepare_initial_state(const SystemOperator& op, InitialPreset preset,
                                  const InitialStateOptions& options = {});

/// Eigenvectors of A_h^* (H-adjoint) with |eigenvalue| < threshold, H-orthonormal.
/// Located by shift-invert Arnoldi at 0.
std::vector<StateVector> near_kernel_modes(const SystemOperator& op, double threshold = 1e-8,
                                           std::size_t krylov_dim = 60);

/// H-orthogonal projection onto the complement of span(modes): the discrete stand-in
/// for the range of A_h. modes must be H-orthonormal.
StateVector project_out(const StateVector& y, const std::vector<StateVector>& modes, const HilbertWeights& w);

struct EigenPair {
    cplx value;
    StateVector vector;  // H-normalized
    double residual = 0.0;  // ||A v - value v||_H
};

/// Shift-and-invert Rayleigh iteration started near the lowest nonzero frequency of the
/// undamped y block.
EigenPair lowest_mode(const SystemOperator& op);

/// Least squares of log E on log t over samples with t in [t_lo, t_hi].
DecayFit fit_decay_exponent(const EnergyTrace& trace, double t_lo, double t_hi);

/// CSV with header t,E,D,flux_re,flux_im.
std::string trace_csv(const EnergyTrace& trace);

} // namespace degschro
