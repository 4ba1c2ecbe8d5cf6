#include "doctest.h"

#include <cmath>
#include <random>

#include "cuspml/geometry.hpp"

using namespace cuspml;

TEST_CASE("cometric values") {
    CHECK(cometric(PhasePoint::d1(1, 0, 1, 0)) == doctest::Approx(1.0));
    CHECK(cometric(PhasePoint::d1(2, 0, 1, 0)) == doctest::Approx(4.0));
    VecT J(2);
    J << 3, 4;
    VecT th(2);
    th << 0, 0;
    CHECK(cometric(PhasePoint(1.0, th, 0.0, J)) == doctest::Approx(25.0));
}

TEST_CASE("cometric is 2-homogeneous in xi") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int k = 0; k < 100; ++k) {
        PhasePoint p = PhasePoint::d1(0.5 + std::abs(u(rng)), u(rng), u(rng), u(rng));
        PhasePoint q = p;
        const double kappa = 1.0 + std::abs(u(rng));
        q.Y *= kappa;
        q.J *= kappa;
        CHECK(cometric(q) == doctest::Approx(kappa * kappa * cometric(p)).epsilon(1e-12));
    }
}

TEST_CASE("sasaki gram at zero covector is the identity") {
    PhasePoint p = PhasePoint::d1(2.0, 0.3, 0.0, 0.0);
    Eigen::MatrixXd G = sasaki_gram(p);
    CHECK((G - Eigen::MatrixXd::Identity(4, 4)).norm() == doctest::Approx(0.0));
}

TEST_CASE("sasaki determinant identity and positivity") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int d = 1; d <= 2; ++d) {
        for (int k = 0; k < 500; ++k) {
            VecT th(d), J(d);
            for (int i = 0; i < d; ++i) {
                th[i] = u(rng);
                J[i] = 2.0 * u(rng);
            }
            double y = 0.3 + 3.0 * std::abs(u(rng));
            double Y = 2.0 * u(rng);
            PhasePoint p(y, th, Y, J);
            if (hamiltonian(p) > 10.0) continue;
            Eigen::MatrixXd G = sasaki_gram(p);
            CHECK((G - G.transpose()).norm() == doctest::Approx(0.0));
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
            CHECK(es.eigenvalues().minCoeff() > 0.0);
            double expected = std::pow(1.0 + y * y * J.squaredNorm(), d - 1);
            CHECK(G.determinant() == doctest::Approx(expected).epsilon(1e-10));
        }
    }
}

TEST_CASE("sasaki determinant example d=2") {
    VecT th(2), J(2);
    th << 0, 0;
    J << 1, 0;
    Eigen::MatrixXd G = sasaki_gram(PhasePoint(1.0, th, 0.0, J));
    CHECK(G.determinant() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("covariant derivative table") {
    // (theta_1, theta_1) -> X_y
    Eigen::VectorXd c = covariant_table(1, 1, 1);
    CHECK(c[0] == doctest::Approx(1.0));
    CHECK(c[1] == doctest::Approx(0.0));
    // (y, y) -> 0
    CHECK(covariant_table(0, 0, 1).norm() == doctest::Approx(0.0));
    // (theta_1, y) -> -X_theta_1
    c = covariant_table(1, 0, 1);
    CHECK(c[0] == doctest::Approx(0.0));
    CHECK(c[1] == doctest::Approx(-1.0));
    CHECK_THROWS_AS(covariant_table(3, 0, 1), std::out_of_range);
}

TEST_CASE("modular reduction examples") {
    auto r = modular_reduce({1.0, 1.0});
    CHECK(std::abs(r.z - std::complex<double>(0.0, 1.0)) < 1e-14);
    r = modular_reduce({0.0, 0.1});
    CHECK(std::abs(r.z - std::complex<double>(0.0, 10.0)) < 1e-12);
    r = modular_reduce({2.3, 5.0});
    CHECK(std::abs(r.z - std::complex<double>(0.3, 5.0)) < 1e-14);
}

TEST_CASE("modular reduction is idempotent and gamma acts correctly") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        std::complex<double> z(4.0 * u(rng) - 2.0, 0.05 + 3.0 * u(rng));
        auto r = modular_reduce(z);
        CHECK(std::abs(r.z.real()) <= 0.5 + 1e-12);
        CHECK(std::norm(r.z) >= 1.0 - 1e-12);
        // gamma . z == z_reduced
        auto& g = r.gamma;
        std::complex<double> num = g(0, 0) * z + g(0, 1);
        std::complex<double> den = g(1, 0) * z + g(1, 1);
        CHECK(std::abs(num / den - r.z) < 1e-10);
        auto r2 = modular_reduce(r.z);
        CHECK(std::abs(r2.z - r.z) < 1e-14);
        CHECK((r2.gamma - Eigen::Matrix2d::Identity()).norm() < 1e-14);
    }
}

TEST_CASE("cusp chart JSON round trip and invariants") {
    CuspChart c;
    auto j = c.to_json();
    CuspChart c2 = CuspChart::from_json(j);
    CHECK(c2.d == 1);
    CHECK(c2.a == doctest::Approx(1.0));
    Eigen::MatrixXd bad(1, 1);
    bad << 2.0;
    CHECK_THROWS_AS(CuspChart(1, bad, 1.0), std::invalid_argument);
    Eigen::MatrixXd ok(1, 1);
    ok << 1.0;
    CHECK_THROWS_AS(CuspChart(1, ok, -1.0), std::invalid_argument);
}
