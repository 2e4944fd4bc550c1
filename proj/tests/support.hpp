#pragma once

#include <complex>
#include <random>

#include <Eigen/Dense>

#include "degschro/arrow_matrix.hpp"
#include "degschro/core_model.hpp"

namespace testsupport {

using degschro::cplx;

inline degschro::StateVector random_state(std::mt19937_64& rng, std::size_t nx, std::size_t nxi) {
    std::normal_distribution<double> n01;
    auto s = degschro::StateVector::zeros(nx, nxi);
    for (auto& v : s.y) v = {n01(rng), n01(rng)};
    for (auto& v : s.psi) v = {n01(rng), n01(rng)};
    return s;
}

inline Eigen::MatrixXcd dense(const degschro::ArrowMatrix& a) {
    const auto d = a.to_dense();
    const auto n = static_cast<Eigen::Index>(a.dimension());
    Eigen::MatrixXcd m(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c) m(r, c) = d[static_cast<std::size_t>(r * n + c)];
    return m;
}

inline Eigen::VectorXcd flat(const degschro::StateVector& s) {
    Eigen::VectorXcd v(static_cast<Eigen::Index>(s.size()));
    Eigen::Index i = 0;
    for (auto x : s.y) v(i++) = x;
    for (auto x : s.psi) v(i++) = x;
    return v;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

} // namespace testsupport
