#include "degschro/arrow_matrix.hpp"

#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <cmath>
#include <string>

#include "degschro/errors.hpp"

namespace degschro {

void ArrowMatrix::validate() const {
    const std::size_t n = diag.size();
    if (n == 0) throw ShapeError("arrow matrix: empty y block");
    if (lower.size() + 1 != n || upper.size() + 1 != n) throw ShapeError("arrow matrix: bad tridiagonal sizes");
    if (row_coupling.size() != npsi() || col_coupling.size() != npsi())
        throw ShapeError("arrow matrix: coupling vectors do not match psi block");
    if (boundary >= n) throw ShapeError("arrow matrix: boundary index out of range");
}

StateVector ArrowMatrix::apply(const StateVector& in) const {
    if (in.y.size() != ny() || in.psi.size() != npsi())
        throw ShapeError("apply: state has shape (" + std::to_string(in.y.size()) + ", " +
                         std::to_string(in.psi.size()) + "), operator expects (" + std::to_string(ny()) + ", " +
                         std::to_string(npsi()) + ")");
    const std::size_t n = ny();
    StateVector out = StateVector::zeros(n, npsi());
    for (std::size_t i = 0; i < n; ++i) {
        cplx s = diag[i] * in.y[i];
        if (i > 0) s += lower[i - 1] * in.y[i - 1];
        if (i + 1 < n) s += upper[i] * in.y[i + 1];
        out.y[i] = s;
    }
    cplx coupled = 0.0;
    for (std::size_t k = 0; k < npsi(); ++k) {
        coupled += row_coupling[k] * in.psi[k];
        out.psi[k] = psi_diag[k] * in.psi[k] + col_coupling[k] * in.y[boundary];
    }
    out.y[boundary] += coupled;
    return out;
}

ArrowMatrix ArrowMatrix::adjoint() const {
    ArrowMatrix r;
    r.boundary = boundary;
    r.diag.resize(diag.size());
    r.lower.resize(upper.size());
    r.upper.resize(lower.size());
    for (std::size_t i = 0; i < diag.size(); ++i) r.diag[i] = std::conj(diag[i]);
    for (std::size_t i = 0; i < lower.size(); ++i) {
        r.lower[i] = std::conj(upper[i]);
        r.upper[i] = std::conj(lower[i]);
    }
    r.psi_diag.resize(npsi());
    r.row_coupling.resize(npsi());
    r.col_coupling.resize(npsi());
    for (std::size_t k = 0; k < npsi(); ++k) {
        r.psi_diag[k] = std::conj(psi_diag[k]);
        r.row_coupling[k] = std::conj(col_coupling[k]);
        r.col_coupling[k] = std::conj(row_coupling[k]);
    }
    return r;
}

ArrowMatrix ArrowMatrix::similarity(std::span<const double> sy, std::span<const double> sp) const {
    if (sy.size() != ny() || sp.size() != npsi()) throw ShapeError("similarity: scale sizes do not match");
    ArrowMatrix r = *this;
    for (std::size_t i = 0; i + 1 < ny(); ++i) {
        r.upper[i] *= sy[i] / sy[i + 1];
        r.lower[i] *= sy[i + 1] / sy[i];
    }
    for (std::size_t k = 0; k < npsi(); ++k) {
        r.row_coupling[k] *= sy[boundary] / sp[k];
        r.col_coupling[k] *= sp[k] / sy[boundary];
    }
    return r;
}

std::vector<cplx> ArrowMatrix::to_dense() const {
    const std::size_t n = ny(), m = npsi(), dim = n + m;
    std::vector<cplx> d(dim * dim);
    auto at = [&](std::size_t r, std::size_t c) -> cplx& { return d[r * dim + c]; };
    for (std::size_t i = 0; i < n; ++i) {
        at(i, i) = diag[i];
        if (i > 0) at(i, i - 1) = lower[i - 1];
        if (i + 1 < n) at(i, i + 1) = upper[i];
    }
    for (std::size_t k = 0; k < m; ++k) {
        at(boundary, n + k) += row_coupling[k];
        at(n + k, boundary) += col_coupling[k];
        at(n + k, n + k) = psi_diag[k];
    }
    return d;
}

ShiftedArrowSolver::ShiftedArrowSolver(const ArrowMatrix& a, cplx z) : a_(&a), z_(z) {
    a.validate();
    const std::size_t n = a.ny();
    inv_psi_.resize(a.npsi());
    cplx sigma = 0.0;
    for (std::size_t k = 0; k < a.npsi(); ++k) {
        const cplx den = z - a.psi_diag[k];
        if (den == cplx(0.0))
            throw SpectralCollisionError("shift coincides with a psi-block eigenvalue", a.psi_diag[k].real(),
                                         a.psi_diag[k].imag());
        inv_psi_[k] = 1.0 / den;
        sigma += a.row_coupling[k] * a.col_coupling[k] * inv_psi_[k];
    }
    d_.resize(n);
    dl_.resize(n - 1);
    du_.resize(n - 1);
    du2_.resize(n > 2 ? n - 2 : 1);
    ipiv_.resize(n);
    for (std::size_t i = 0; i < n; ++i) d_[i] = z - a.diag[i];
    for (std::size_t i = 0; i + 1 < n; ++i) {
        dl_[i] = -a.lower[i];
        du_[i] = -a.upper[i];
    }
    d_[a.boundary] -= sigma;
    const lapack_int info = LAPACKE_zgttrf(static_cast<lapack_int>(n), dl_.data(), d_.data(), du_.data(),
                                           du2_.data(), ipiv_.data());
    if (info < 0) throw NumericalError("zgttrf: illegal argument " + std::to_string(-info));
    if (info > 0)
        throw SpectralCollisionError("z I - A is singular (zero pivot at row " + std::to_string(info) +
                                         "); z is a discrete eigenvalue",
                                     z.real(), z.imag());
}

StateVector ShiftedArrowSolver::solve(const StateVector& rhs) const {
    const ArrowMatrix& a = *a_;
    if (rhs.y.size() != a.ny() || rhs.psi.size() != a.npsi()) throw ShapeError("solve: rhs shape mismatch");
    StateVector out;
    out.y = rhs.y;
    cplx extra = 0.0;
    for (std::size_t k = 0; k < a.npsi(); ++k) extra += a.row_coupling[k] * rhs.psi[k] * inv_psi_[k];
    out.y[a.boundary] += extra;
    const lapack_int info =
        LAPACKE_zgttrs(LAPACK_COL_MAJOR, 'N', static_cast<lapack_int>(a.ny()), 1, dl_.data(), d_.data(),
                       du_.data(), du2_.data(), ipiv_.data(), out.y.data(), static_cast<lapack_int>(a.ny()));
    if (info != 0) throw NumericalError("zgttrs failed with info " + std::to_string(info));
    out.psi.resize(a.npsi());
    const cplx yb = out.y[a.boundary];
    for (std::size_t k = 0; k < a.npsi(); ++k) out.psi[k] = (rhs.psi[k] + a.col_coupling[k] * yb) * inv_psi_[k];
    return out;
}

} // namespace degschro
