#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "degschro/errors.hpp"
#include "degschro/spatial_discretization.hpp"
#include "support.hpp"

using namespace degschro;
using testsupport::dense;

namespace {

std::vector<SystemOperator> family() {
    std::vector<SystemOperator> ops;
    const auto tab = tabulate_kappa([](double x) { return x * (1.5 - 0.5 * x); }, 200);
    const std::vector<ProblemSpec> specs{
        ProblemSpec(Variant::P, PowerLaw{0.5}, 0.5, 1.0),      ProblemSpec(Variant::P, PowerLaw{0.2}, 0.3, 4.0),
        ProblemSpec(Variant::Pprime, PowerLaw{0.5}, 0.5, 1.0), ProblemSpec(Variant::Pprime, PowerLaw{1.5}, 0.7, 0.5),
        ProblemSpec(Variant::Pprime, tab, 0.5, 1.0)};
    for (const auto& s : specs)
        ops.push_back(assemble_operator(s, build_x_grid(120, default_grade(s)), build_xi_quadrature(s.beta())));
    return ops;
}

} // namespace

TEST_CASE("x grid") {
    auto g = build_x_grid(4, 1.0);
    CHECK(g.nodes == std::vector<double>{0.25, 0.5, 0.75, 1.0});
    CHECK(g.widths == std::vector<double>{0.375, 0.25, 0.25, 0.125});
    g = build_x_grid(4, 2.0);
    CHECK(g.nodes == std::vector<double>{0.0625, 0.25, 0.5625, 1.0});
    for (std::size_t n : {2u, 4u, 16u, 333u})
        for (double gr : {1.0, 1.7, 2.0, 4.0}) {
            const auto x = build_x_grid(n, gr);
            double s = 0.0;
            for (double h : x.widths) s += h;
            CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
            CHECK(std::is_sorted(x.nodes.begin(), x.nodes.end()));
        }
    CHECK_THROWS_AS(build_x_grid(16, 0.5), RangeError);
    CHECK_THROWS_AS(build_x_grid(16, 4.5), RangeError);
    CHECK_THROWS_AS(build_x_grid(1, 1.0), RangeError);
}

TEST_CASE("default grade") {
    CHECK(default_grade(ProblemSpec(Variant::P, PowerLaw{0.5}, 0.5, 1.0)) == 1.0);
    CHECK(default_grade(ProblemSpec(Variant::Pprime, PowerLaw{1.5}, 0.5, 1.0)) == 2.0);
    CHECK(default_grade(ProblemSpec(Variant::Pprime, tabulate_kappa([](double x) { return x; }, 50), 0.5, 1.0)) ==
          2.0);
}

TEST_CASE("operator dimension and block layout") {
    const ProblemSpec spec(Variant::P, PowerLaw{0.5}, 0.5, 1.0);
    const auto op = assemble_operator(spec, build_x_grid(50), build_xi_quadrature(0.5, 30));
    CHECK(op.dimension() == 80);
    CHECK(op.boundary_index() == 0);
    const ProblemSpec sp(Variant::Pprime, PowerLaw{0.5}, 0.5, 1.0);
    CHECK(assemble_operator(sp, build_x_grid(50), build_xi_quadrature(0.5, 30)).boundary_index() == 49);
    CHECK_THROWS_AS(assemble_operator(spec, build_x_grid(50), build_xi_quadrature(0.4, 30)), ConfigurationError);
    const ProblemSpec g(Variant::P, PowerLaw{0.5}, 0.5, 1.0, 0.3);
    CHECK_THROWS_AS(assemble_operator(g, build_x_grid(50), build_xi_quadrature(0.5, 30)), ConfigurationError);
}

TEST_CASE("discrete dissipativity identity") {
    std::mt19937_64 rng(2024);
    for (const auto& op : family()) {
        for (int i = 0; i < 100; ++i) {
            const auto y = testsupport::random_state(rng, op.nx(), op.nxi());
            const auto ay = apply_operator(op, y);
            const double lhs = inner_product(ay, y, op.weights()).real();
            const double d = dissipation(op, y);
            const double scale = norm(ay, op.weights()) * norm(y, op.weights());
            CHECK(std::abs(lhs - d) <= 1e-12 * scale);
            CHECK(d <= 0.0);
        }
    }
}

TEST_CASE("diffusion block is i times a symmetric nonpositive form") {
    for (const auto& op : family()) {
        const auto& a = op.matrix();
        const auto& h = op.weights().y;
        Eigen::MatrixXd s = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(op.nx()), static_cast<Eigen::Index>(op.nx()));
        for (std::size_t i = 0; i < op.nx(); ++i) {
            CHECK(a.diag[i].real() == 0.0);
            s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = a.diag[i].imag() * h[i];
            if (i + 1 < op.nx()) {
                CHECK(a.upper[i].real() == 0.0);
                CHECK(h[i] * a.upper[i].imag() == doctest::Approx(h[i + 1] * a.lower[i].imag()).epsilon(1e-14));
                s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i + 1)) = h[i] * a.upper[i].imag();
                s(static_cast<Eigen::Index>(i + 1), static_cast<Eigen::Index>(i)) = h[i] * a.upper[i].imag();
            }
        }
        const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s).eigenvalues();
        CHECK(ev.maxCoeff() <= 1e-10 * ev.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("undamped constant-coefficient sanity spectrum") {
    Tabulated one;
    for (int i = 0; i <= 20; ++i) one.x.push_back(std::pow(10.0, -8.0 + 0.4 * i));
    one.kappa.assign(one.x.size(), 1.0);
    const ProblemSpec spec(Variant::Pprime, one, 0.5, 1.0);
    REQUIRE(spec.degeneracy().boundary_class == BoundaryClass::DirichletAtZero);
    const auto op = assemble_operator(spec, build_x_grid(400), build_xi_quadrature(0.5, 16), {.damped = false});
    const Eigen::MatrixXcd d = dense(op.matrix()).topLeftCorner(400, 400);
    const Eigen::VectorXcd ev = Eigen::ComplexEigenSolver<Eigen::MatrixXcd>(d, false).eigenvalues();
    std::vector<cplx> v(ev.data(), ev.data() + ev.size());
    std::sort(v.begin(), v.end(), [](cplx a, cplx b) { return std::abs(a) < std::abs(b); });
    for (int k = 0; k < 4; ++k) {
        const double w = (k + 0.5) * std::numbers::pi;
        CHECK(std::abs(v[static_cast<std::size_t>(k)].real()) < 1e-8 * w * w);
        CHECK(std::abs(v[static_cast<std::size_t>(k)].imag() + w * w) < 0.01 * w * w);
    }
}

TEST_CASE("kernel-related properties of the assembled operator") {
    const auto xi = build_xi_quadrature(0.5, 40);
    {
        const ProblemSpec spec(Variant::P, PowerLaw{0.5}, 0.5, 1.0);
        const auto op = assemble_operator(spec, build_x_grid(60), xi);
        auto c = StateVector::zeros(op.nx(), op.nxi());
        for (auto& v : c.y) v = 1.0;
        const auto ac = apply_operator(op, c);
        for (std::size_t k = 0; k < op.nxi(); ++k) CHECK(ac.psi[k] == cplx(xi.eta[k]));
        for (auto v : ac.y) CHECK(std::abs(v) < 1e-9);
    }
    {
        const ProblemSpec spec(Variant::Pprime, PowerLaw{0.5}, 0.5, 1.0);
        const auto op = assemble_operator(spec, build_x_grid(60), xi, {.damped = false});
        auto c = StateVector::zeros(op.nx(), op.nxi());
        for (auto& v : c.y) v = 1.0;
        const auto ac = apply_operator(op, c);
        CHECK(std::abs(ac.y[0]) > 1.0);
    }
}

TEST_CASE("apply_operator is linear and respects the block structure") {
    std::mt19937_64 rng(1);
    for (const auto& op : family()) {
        const auto z = apply_operator(op, StateVector::zeros(op.nx(), op.nxi()));
        for (auto v : z.y) CHECK(v == cplx(0.0));
        const auto a = testsupport::random_state(rng, op.nx(), op.nxi());
        const auto b = testsupport::random_state(rng, op.nx(), op.nxi());
        const cplx s(0.3, -1.2), t(-2.0, 0.5);
        const auto lhs = apply_operator(op, s * a + t * b);
        const auto rhs = s * apply_operator(op, a) + t * apply_operator(op, b);
        CHECK(norm(lhs - rhs, op.weights()) <= 1e-13 * norm(lhs, op.weights()));

        auto p = StateVector::zeros(op.nx(), op.nxi());
        p.psi = a.psi;
        const auto ap = apply_operator(op, p);
        for (std::size_t k = 0; k < op.nxi(); ++k) CHECK(ap.psi[k] == -op.xigrid().nodes[k] * op.xigrid().nodes[k] * p.psi[k]);
        for (std::size_t i = 0; i < op.nx(); ++i)
            if (i != op.boundary_index()) CHECK(ap.y[i] == cplx(0.0));
        CHECK(std::abs(ap.y[op.boundary_index()]) > 0.0);
        CHECK_THROWS_AS(apply_operator(op, StateVector::zeros(op.nx() + 1, op.nxi())), ShapeError);
    }
}

TEST_CASE("boundary flux and dissipation helpers") {
    const ProblemSpec spec(Variant::P, PowerLaw{0.5}, 0.5, 1.0);
    const auto op = assemble_operator(spec, build_x_grid(30), build_xi_quadrature(0.5, 20));
    auto s = StateVector::zeros(op.nx(), op.nxi());
    s.psi[3] = 2.0;
    const auto& g = op.xigrid();
    CHECK(boundary_flux(op, s) == cplx(spec.zeta() * g.weights[3] * g.eta[3] * 2.0));
    CHECK(dissipation(op, s) == doctest::Approx(-spec.zeta() * g.weights[3] * g.nodes[3] * g.nodes[3] * 4.0));
    const auto un = assemble_operator(spec, build_x_grid(30), g, {.damped = false});
    CHECK(dissipation(un, s) == 0.0);
    CHECK(energy(s, un) == 0.0);
}

TEST_CASE("scaled coordinates make the H inner product Euclidean") {
    std::mt19937_64 rng(4);
    for (const auto& op : family()) {
        const auto a = testsupport::random_state(rng, op.nx(), op.nxi());
        const auto b = testsupport::random_state(rng, op.nx(), op.nxi());
        const cplx h = inner_product(a, b, op.weights());
        const cplx e = testsupport::flat(op.to_scaled(b)).dot(testsupport::flat(op.to_scaled(a)));
        CHECK(std::abs(h - e) < 1e-12 * std::abs(h) + 1e-12);
        const auto sa = op.scaled_matrix().apply(op.to_scaled(a));
        CHECK(norm(op.from_scaled(sa) - apply_operator(op, a), op.weights()) < 1e-12 * norm(apply_operator(op, a), op.weights()));
    }
}

TEST_CASE("COO export round trip") {
    const ProblemSpec spec(Variant::Pprime, PowerLaw{1.5}, 0.5, 1.0);
    const auto op = assemble_operator(spec, build_x_grid(12, 2.0), build_xi_quadrature(0.5, 16));
    const auto d = dense(op.matrix());
    Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(d.rows(), d.cols());
    std::istringstream in(export_coo(op));
    long row, col;
    double re, im;
    std::size_t count = 0;
    while (in >> row >> col >> re >> im) {
        r(row, col) = cplx(re, im);
        ++count;
    }
    CHECK(count > 0);
    CHECK((r - d).norm() == 0.0);
    const auto meta = operator_metadata(op);
    CHECK(meta.at("nx") == 12);
    CHECK(meta.at("nxi") == 16);
    CHECK(meta.at("boundary_index") == 11);
    CHECK(meta.at("problem").at("variant") == "Pprime");
}
