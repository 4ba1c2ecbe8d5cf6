#include "doctest.h"

#include <cmath>
#include <random>

#include "cuspml/symbol.hpp"

using namespace cuspml;

namespace {

Symbol symbol_yY() {
    Symbol s;
    s.d = 1;
    s.order = 1.0;
    s.eval_fn = [](double, const PhasePoint& p) { return Cpx(p.y * p.Y, 0.0); };
    s.d1_fn = [](double, const PhasePoint& p, int c) {
        if (c == 0) return Cpx(p.Y, 0.0);
        if (c == 2) return Cpx(p.y, 0.0);
        return Cpx(0.0, 0.0);
    };
    s.d2_fn = [](double, const PhasePoint&, int c1, int c2) {
        if ((c1 == 0 && c2 == 2) || (c1 == 2 && c2 == 0)) return Cpx(1.0, 0.0);
        return Cpx(0.0, 0.0);
    };
    return s;
}

Symbol symbol_yJ() {
    Symbol s;
    s.d = 1;
    s.order = 1.0;
    s.eval_fn = [](double, const PhasePoint& p) { return Cpx(p.y * p.J[0], 0.0); };
    s.d1_fn = [](double, const PhasePoint& p, int c) {
        if (c == 0) return Cpx(p.J[0], 0.0);
        if (c == 3) return Cpx(p.y, 0.0);
        return Cpx(0.0, 0.0);
    };
    s.d2_fn = [](double, const PhasePoint&, int c1, int c2) {
        if ((c1 == 0 && c2 == 3) || (c1 == 3 && c2 == 0)) return Cpx(1.0, 0.0);
        return Cpx(0.0, 0.0);
    };
    return s;
}

Symbol symbol_p() {
    Symbol s;
    s.d = 1;
    s.order = 2.0;
    s.eval_fn = [](double, const PhasePoint& p) { return Cpx(hamiltonian(p), 0.0); };
    return s;
}

}  // namespace

TEST_CASE("apply_field on yY") {
    Symbol s = symbol_yY();
    PhasePoint p = PhasePoint::d1(1.7, 0.2, 0.6, -0.4);
    // X_Y (yY) = (1/y) d_Y (yY) = 1
    Symbol xY = apply_field(s, 2);
    CHECK(std::abs(xY(0.1, p) - Cpx(1.0, 0.0)) < 1e-9);
    CHECK(xY.order == doctest::Approx(0.0));
    // X_y (yY) = y d_y (yY) = yY
    Symbol xy = apply_field(s, 0);
    CHECK(std::abs(xy(0.1, p) - Cpx(p.y * p.Y, 0.0)) < 1e-9);
    CHECK(xy.order == doctest::Approx(1.0));
}

TEST_CASE("apply_field finite differences match analytic partials of f(p)") {
    // X_{J_1} f(p) = f'(p) y J_1
    Symbol fp = make_gaussian_p(0.3, 0.2, std::nullopt);
    Symbol noan = fp;
    noan.d1_fn = nullptr;
    noan.d2_fn = nullptr;
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-0.7, 0.7);
    for (int k = 0; k < 40; ++k) {
        PhasePoint p = PhasePoint::d1(1.0 + std::abs(u(rng)), u(rng), u(rng), u(rng));
        Symbol xa = apply_field(fp, 3);
        Symbol xf = apply_field(noan, 3);
        Cpx a = xa(0.1, p), b = xf(0.1, p);
        CHECK(std::abs(a - b) <= 1e-6 * (1.0 + std::abs(a)));
    }
}

TEST_CASE("seminorm basics") {
    Symbol one = symbol_const(1, Cpx(1.0, 0.0));
    std::vector<PhasePoint> grid{PhasePoint::d1(1, 0, 0.3, 0.1),
                                 PhasePoint::d1(2, 0.4, -1.0, 0.2)};
    CHECK(seminorm(one, 0.0, {}, grid, 0.1) == doctest::Approx(1.0));

    // sigma = yY at a grid point with max |yY| = 5: sup |yY| / <yY> = 5/sqrt(26)
    Symbol s = symbol_yY();
    std::vector<PhasePoint> g2{PhasePoint::d1(1, 0, 5.0, 0.0),
                               PhasePoint::d1(1, 0, 1.0, 0.0)};
    CHECK(seminorm(s, 1.0, {}, g2, 0.1) == doctest::Approx(5.0 / std::sqrt(26.0)));

    CHECK_THROWS_AS(seminorm(s, 1.0, {}, {}, 0.1), std::invalid_argument);
}

TEST_CASE("seminorm with derivative vs refined grid sup") {
    Symbol bump = make_bump(BumpParams{});
    auto grid = seminorm_grid(bump, CuspChart(), 32, 1, 80, 1.5);
    auto fine = seminorm_grid(bump, CuspChart(), 64, 1, 160, 1.5);
    double a = seminorm(bump, 0.0, {2}, grid, 0.1);
    double b = seminorm(bump, 0.0, {2}, fine, 0.1);
    CHECK(std::abs(a - b) < 0.02 * std::max(a, b));
}

TEST_CASE("poisson bracket identities") {
    Symbol p = symbol_p();
    Symbol yfun;
    yfun.d = 1;
    yfun.order = 0.0;
    yfun.eval_fn = [](double, const PhasePoint& q) { return Cpx(q.y, 0.0); };

    // {p, y} = dY p dy y = y^2 Y
    Symbol br = poisson(p, yfun);
    PhasePoint q = PhasePoint::d1(1.3, 0.1, 0.7, -0.2);
    CHECK(std::abs(br(0.1, q) - Cpx(q.y * q.y * q.Y, 0.0)) < 1e-7);

    // {p, p} = 0
    Symbol pp = poisson(p, p);
    CHECK(std::abs(pp(0.1, q)) < 1e-8);

    // {yY, yJ} = yJ, checked against the finite-difference bracket
    Symbol a = symbol_yY(), b = symbol_yJ();
    Symbol ab = poisson(a, b);
    CHECK(std::abs(ab(0.1, q) - Cpx(q.y * q.J[0], 0.0)) < 1e-8);
}

TEST_CASE("poisson antisymmetry at random points") {
    Symbol a = make_bump(BumpParams{2.0, 5.0, 0.35, 0.4, 1, 0.1, 0.3, -0.05, 0.25});
    Symbol b = make_gaussian_p(0.1, 0.1, BumpParams{2.2, 4.5, 0.3});
    Symbol ab = poisson(a, b);
    Symbol ba = poisson(b, a);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int k = 0; k < 30; ++k) {
        PhasePoint q = PhasePoint::d1(2.2 + 2.0 * std::abs(u(rng)), u(rng) + 0.5,
                                      u(rng) / 2, u(rng) / 2);
        Cpx v1 = ab(0.1, q), v2 = ba(0.1, q);
        CHECK(std::abs(v1 + v2) < 1e-10 * (1.0 + std::abs(v1)));
    }
}

TEST_CASE("principal symbol of basic operators") {
    // D = (h/i) X_y -> yY: coefficient -i, word {y}
    DiffOp D;
    D.d = 1;
    D.terms.push_back({0, {0}, symbol_const(1, Cpx(0.0, -1.0))});
    Symbol s = principal_symbol(D);
    PhasePoint q = PhasePoint::d1(2.0, 0.3, 0.7, -0.1);
    CHECK(std::abs(s(0.1, q) - Cpx(q.y * q.Y, 0.0)) < 1e-12);

    // constant term
    DiffOp C;
    C.d = 1;
    C.terms.push_back({0, {}, symbol_const(1, Cpx(3.5, 0.0))});
    CHECK(std::abs(principal_symbol(C)(0.1, q) - Cpx(3.5, 0.0)) < 1e-14);

    // P = -(1/2)[(h X_y)^2 - d h (h X_y) + (h X_theta)^2] -> p
    DiffOp P;
    P.d = 1;
    P.terms.push_back({0, {0, 0}, symbol_const(1, Cpx(-0.5, 0.0))});
    P.terms.push_back({1, {0}, symbol_const(1, Cpx(0.5, 0.0))});  // carries extra h
    P.terms.push_back({0, {1, 1}, symbol_const(1, Cpx(-0.5, 0.0))});
    Symbol ps = principal_symbol(P);
    CHECK(std::abs(ps(0.1, q) - Cpx(hamiltonian(q), 0.0)) < 1e-12);
}

TEST_CASE("principal symbol is multiplicative under composition") {
    // coefficient with analytic partials: window in y
    Symbol w = make_y_window(1.5, 8.0, 0.4);
    DiffOp A;
    A.d = 1;
    A.terms.push_back({0, {0}, w});                          // w(y) h X_y
    A.terms.push_back({0, {}, symbol_const(1, Cpx(0.3, 0))});
    DiffOp B;
    B.d = 1;
    B.terms.push_back({0, {1}, symbol_const(1, Cpx(0, -1))});  // (h/i) X_theta

    DiffOp AB = diffop_compose(A, B);
    Symbol sa = principal_symbol(A), sb = principal_symbol(B), sab = principal_symbol(AB);
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> u(-0.6, 0.6);
    for (int k = 0; k < 25; ++k) {
        PhasePoint q = PhasePoint::d1(2.0 + std::abs(u(rng)) * 3, u(rng), u(rng), u(rng));
        Cpx lhs = sab(0.1, q);
        Cpx rhs = sa(0.1, q) * sb(0.1, q);
        CHECK(std::abs(lhs - rhs) < 1e-10 * (1.0 + std::abs(rhs)));
    }
}

TEST_CASE("cusp cutoff profile") {
    CuspChart chart;
    for (double s : {0.0, 1.0, 5.0, 10.0}) {
        Symbol chi = make_cusp_cutoff(s, chart);
        // == 1 for ln(y/a) <= s + ln 4
        double y1 = chart.a * std::exp(s + std::log(4.0) - 0.01);
        CHECK(std::abs(chi(0.1, PhasePoint::d1(y1, 0, 0, 0)) - 1.0) < 1e-12);
        CHECK(std::abs(chi(0.1, PhasePoint::d1(chart.a, 0, 0, 0)) - 1.0) < 1e-12);
        // == 0 beyond ln 5, e.g. at ln(y/a) = s + ln 6
        double y0 = chart.a * std::exp(s + std::log(6.0));
        CHECK(std::abs(chi(0.1, PhasePoint::d1(y0, 0, 0, 0))) < 1e-14);
    }
    // sup_y |y d_y chi_s| independent of s within 1%
    auto sup_deriv = [&](double s) {
        Symbol chi = make_cusp_cutoff(s, chart);
        Symbol d = apply_field(chi, 0);
        double best = 0;
        for (int i = 0; i <= 400; ++i) {
            double ln_y = s + std::log(4.0) + (std::log(5.0) - std::log(4.0)) * i / 400.0;
            best = std::max(best, std::abs(d(0.1, PhasePoint::d1(std::exp(ln_y), 0, 0, 0))));
        }
        return best;
    };
    double ref = sup_deriv(0.0);
    for (double s : {1.0, 5.0, 10.0}) CHECK(std::abs(sup_deriv(s) - ref) < 0.01 * ref);
}

TEST_CASE("grading: seminorm of X_Y sigma at order n-1 stays finite") {
    Symbol bump = make_bump(BumpParams{});
    auto grid = seminorm_grid(bump, CuspChart(), 16, 1, 16, 8.0);
    Symbol der = apply_field(bump, 2);
    double q = seminorm(der, -1.0, {}, grid, 0.1);
    CHECK(std::isfinite(q));
    // bracket order: {a, b} in S^{m+n-1}
    Symbol b2 = make_gaussian_p(0.1, 0.1, BumpParams{2.2, 4.5, 0.3});
    double qb = seminorm(poisson(bump, b2), bump.order + b2.order - 1.0, {}, grid, 0.1);
    CHECK(std::isfinite(qb));
}

TEST_CASE("symbol support hints are enforced") {
    Symbol bump = make_bump(BumpParams{});
    CHECK(std::abs(bump(0.1, PhasePoint::d1(1.0, 0, 0, 0))) == 0.0);   // outside y support
    CHECK(std::abs(bump(0.1, PhasePoint::d1(3.0, 0, 50.0, 0))) == 0.0);  // above energy bound
    CHECK(std::abs(bump(0.1, PhasePoint::d1(3.0, 0.2, 0.0, 0.0))) > 0.1);
}

TEST_CASE("symbol JSON recipes") {
    CuspChart chart;
    auto s1 = symbol_from_recipe(nlohmann::json{{"name", "bump"}, {"y_lo", 2.0}, {"y_hi", 5.0}}, chart);
    CHECK(std::abs(s1(0.1, PhasePoint::d1(3.2, 0.1, 0.0, 0.0))) > 0.0);
    auto s2 = symbol_from_recipe(nlohmann::json{{"name", "constant"}, {"value", 2.0}}, chart);
    CHECK(std::abs(s2(0.1, PhasePoint::d1(1.0, 0, 0, 0)) - Cpx(2.0, 0.0)) < 1e-15);
    CHECK_THROWS_AS(symbol_from_recipe(nlohmann::json{{"name", "nope"}}, chart),
                    std::invalid_argument);
}

TEST_CASE("analytic second partials of corpus symbols agree with finite differences") {
    Symbol bump = make_bump(BumpParams{2.0, 5.0, 0.35, 0.3, 1, 0.2, 0.25, -0.1, 0.3});
    Symbol plain = bump;
    plain.d1_fn = nullptr;
    plain.d2_fn = nullptr;
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    for (int k = 0; k < 20; ++k) {
        PhasePoint q = PhasePoint::d1(2.6 + std::abs(u(rng)), u(rng) + 0.4, u(rng), u(rng));
        for (int c1 = 0; c1 < 4; ++c1) {
            Cpx a = bump.partial(0.1, q, c1);
            Cpx b = plain.partial(0.1, q, c1);
            CHECK(std::abs(a - b) < 2e-6 * (1.0 + std::abs(a)));
        }
        for (int c1 = 0; c1 < 4; ++c1)
            for (int c2 = c1; c2 < 4; ++c2) {
                Cpx a = bump.partial2(0.1, q, c1, c2);
                Cpx b = plain.partial2(0.1, q, c1, c2);
                CHECK(std::abs(a - b) < 2e-4 * (1.0 + std::abs(a)));
            }
    }
}
