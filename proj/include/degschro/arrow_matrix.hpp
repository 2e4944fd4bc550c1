#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "degschro/core_model.hpp"

namespace degschro {

/// Block operator acting on (y, psi):
///
///     [ T          e_b p^T ]
///     [ q e_b^T    diag(a) ]
///
/// T is tridiagonal, the psi block is diagonal and the two blocks talk only through
/// component b of y. Both the discrete generator and its scaled/adjoint forms have
/// this shape, so every solve reduces to one tridiagonal factorization.
struct ArrowMatrix {
    CVector lower;         // T(i+1, i), size n-1
    CVector diag;          // T(i, i), size n
    CVector upper;         // T(i, i+1), size n-1
    CVector psi_diag;      // a_k, size m
    std::size_t boundary = 0;
    CVector row_coupling;  // p_k: (A Y)_y[b] += p_k psi_k
    CVector col_coupling;  // q_k: (A Y)_psi[k] += q_k y_b

    std::size_t ny() const noexcept { return diag.size(); }
    std::size_t npsi() const noexcept { return psi_diag.size(); }
    std::size_t dimension() const noexcept { return ny() + npsi(); }

    StateVector apply(const StateVector& in) const;

    /// Conjugate transpose in the Euclidean inner product.
    ArrowMatrix adjoint() const;

    /// S A S^{-1} with S = diag(scale_y, scale_psi).
    ArrowMatrix similarity(std::span<const double> scale_y, std::span<const double> scale_psi) const;

    /// Dense row-major copy, ordering (y, psi). For small oracle checks only.
    std::vector<cplx> to_dense() const;

    void validate() const;
};

/// Factorization of (z I - A). The psi block is eliminated by its diagonal Schur
/// complement, which only modifies T(b, b); the remainder is a pivoted tridiagonal LU.
class ShiftedArrowSolver {
public:
    /// Throws SpectralCollisionError when z hits a psi eigenvalue or the reduced
    /// tridiagonal system is exactly singular.
    ShiftedArrowSolver(const ArrowMatrix& a, cplx z);

    StateVector solve(const StateVector& rhs) const;
    cplx shift() const noexcept { return z_; }

private:
    const ArrowMatrix* a_;
    cplx z_;
    CVector inv_psi_;  // 1 / (z - a_k)
    CVector dl_, d_, du_, du2_;
    std::vector<int> ipiv_;
};

} // namespace degschro
