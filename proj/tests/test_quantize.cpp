#include "doctest.h"

#include <cmath>

#include "cuspml/quantize.hpp"

using namespace cuspml;

namespace {

GridSpec small_grid() {
    GridSpec g;
    g.y_min = 1.0;
    g.y_max = 12.0;
    g.n_y = 120;
    g.n_theta = 12;
    g.mode_max = 3;
    g.n_quad_y = 32;
    return g;
}

Symbol std_bump(double beta = 0.0) {
    BumpParams p;
    p.y_lo = 2.0;
    p.y_hi = 5.5;
    p.edge = 0.35;
    p.theta_beta = beta;
    p.cY = 0.0;
    p.wY = 0.18;
    p.cJ = 0.0;
    p.wJ = 0.18;
    return make_bump(p);
}

}  // namespace

TEST_CASE("op_matrix of the zero symbol is zero") {
    GridSpec g = small_grid();
    Symbol z = symbol_zero(1);
    z.support.has_y = true;
    z.support.y_lo = 2.0;
    z.support.y_hi = 5.0;
    OperatorMatrix M = op_matrix(z, 0.1, g);
    CHECK(M.op_norm() == doctest::Approx(0.0));
}

TEST_CASE("multiplication symbols quantize to multiplication matrices") {
    GridSpec g = small_grid();
    // x-only symbol with theta dependence, no xi content
    Symbol w = make_y_window(1.8, 6.0, 0.4);
    Symbol theta_part;
    theta_part.d = 1;
    theta_part.support.theta_modes = 1;
    theta_part.eval_fn = [](double, const PhasePoint& p) {
        return Cpx(1.0 + 0.4 * std::cos(2.0 * M_PI * p.theta[0]), 0.0);
    };
    theta_part.d1_fn = [](double, const PhasePoint& p, int c) {
        if (c == 1)
            return Cpx(-0.4 * 2.0 * M_PI * std::sin(2.0 * M_PI * p.theta[0]), 0.0);
        return Cpx(0.0, 0.0);
    };
    theta_part.d2_fn = [](double, const PhasePoint& p, int c1, int c2) {
        if (c1 == 1 && c2 == 1)
            return Cpx(-0.4 * 4.0 * M_PI * M_PI * std::cos(2.0 * M_PI * p.theta[0]), 0.0);
        return Cpx(0.0, 0.0);
    };
    Symbol sx = symbol_mul(w, theta_part);

    OperatorMatrix M = op_matrix(sx, 0.1, g);
    OperatorMatrix D = multiplication_matrix(sx, g, 0.1);
    double gap = M.add(D, 1.0, -1.0).op_norm();
    CHECK(gap < 1e-8 * D.op_norm());
}

TEST_CASE("real symbols give weighted-self-adjoint matrices") {
    GridSpec g = small_grid();
    for (double beta : {0.0, 0.5}) {
        Symbol s = std_bump(beta);
        OperatorMatrix M = op_matrix(s, 0.1, g);
        double defect = M.add(M.adjoint(), 1.0, -1.0).op_norm();
        CHECK(defect < 1e-10 * M.op_norm());
    }
}

TEST_CASE("quantization is linear") {
    GridSpec g = small_grid();
    Symbol a = std_bump(0.0);
    Symbol b = make_gaussian_p(0.02, 0.008, BumpParams{2.2, 5.0, 0.3});
    OperatorMatrix Ma = op_matrix(a, 0.1, g);
    OperatorMatrix Mb = op_matrix(b, 0.1, g);
    OperatorMatrix Mab = op_matrix(symbol_add(a, b, Cpx(2.0, 0.0), Cpx(-0.5, 0.0)), 0.1, g);
    OperatorMatrix lin = Ma.scale(2.0).add(Mb.scale(-0.5), 1.0, 1.0);
    CHECK(Mab.add(lin, 1.0, -1.0).op_norm() < 1e-12 * (Mab.op_norm() + 1.0));
}

TEST_CASE("support discipline rejects edge-heavy symbols") {
    GridSpec g = small_grid();
    BumpParams p;
    p.y_lo = 0.9;  // leans onto the lower band edge
    p.y_hi = 3.0;
    Symbol bad = make_bump(p);
    CHECK_THROWS_AS(op_matrix(bad, 0.1, g), std::invalid_argument);
    CHECK_NOTHROW(op_matrix(bad, 0.1, g, 0.5, false));
}

TEST_CASE("laplacian: hermitian, block structure, y^s eigen-relation") {
    GridSpec g = small_grid();
    double h = 0.1;
    OperatorMatrix P = laplacian_matrix(h, g);
    // exact weighted hermiticity by construction
    CHECK(P.add(P.adjoint(), 1.0, -1.0).op_norm() < 1e-10 * P.op_norm());
    CHECK(P.block_diagonal());
    // commutes with the single-mode projectors exactly (block structure)
    for (int n : {-1, 0, 2}) {
        OperatorMatrix Pn;
        Pn.grid = g;
        Pn.h = h;
        Pn.blocks[{n, n}] = Eigen::MatrixXcd::Identity(g.n_y, g.n_y);
        CHECK(P.mul(Pn).add(Pn.mul(P), 1.0, -1.0).op_norm() == doctest::Approx(0.0));
    }

    // mode-0 rows applied to y^s: interior residual is O(du^2)
    auto residual = [&](const GridSpec& gr) {
        OperatorMatrix Pg = laplacian_matrix(h, gr);
        const Eigen::MatrixXcd& B = *Pg.block(0, 0);
        double s = 0.3;
        Eigen::VectorXcd v(gr.n_y);
        for (int j = 0; j < gr.n_y; ++j) v[j] = std::pow(gr.y_at(j), s);
        Eigen::VectorXcd Pv = B * v;
        double target = 0.5 * h * h * s * (1.0 - s);
        double worst = 0.0;
        for (int j = 2; j < gr.n_y - 2; ++j)
            worst = std::max(worst, std::abs(Pv[j] - target * v[j]) / std::abs(v[j]));
        return worst;
    };
    GridSpec fine = g;
    fine.n_y = 2 * g.n_y;
    double r1 = residual(g), r2 = residual(fine);
    CHECK(r1 / r2 > 3.0);  // second-order convergence
    CHECK(r1 < 1e-3);
}

TEST_CASE("sobolev norms via the spectral decomposition") {
    GridSpec g = small_grid();
    double h = 0.1;
    auto lap = laplacian_blocks(h, g);
    auto sp = spectral_p(lap);

    // s = 0 reduces to the L2 norm
    DiscreteFunction f = DiscreteFunction::from_function(g, [](double y, double th) {
        return Cpx(std::exp(-2.0 * (std::log(y) - 1.2) * (std::log(y) - 1.2)) *
                       std::cos(2.0 * M_PI * th),
                   0.0);
    });
    CHECK(sobolev_norm(f, 0.0, sp) == doctest::Approx(f.norm()).epsilon(1e-12));

    // eigenvector of P with eigenvalue mu: ||(P+1)^{s/2} f|| = (1+mu)^{s/2}||f||
    int blk = 0 + g.mode_max;
    Eigen::VectorXd vec = sp.eigenvectors[blk].col(5);
    double mu = sp.eigenvalues[blk][5];
    Eigen::VectorXcd coef(g.n_y);
    for (int j = 0; j < g.n_y; ++j)
        coef[j] = vec[j] * std::pow(g.y_at(j), 0.5 * g.chart.d);
    DiscreteFunction ef = DiscreteFunction::from_mode(g, 0, coef);
    double n2 = sobolev_norm(ef, 2.0, sp);
    CHECK(n2 == doctest::Approx((1.0 + mu) * ef.norm()).epsilon(1e-10));
    // monotone in s
    CHECK(sobolev_norm(ef, 1.0, sp) <= n2 * (1.0 + 1e-12));
}

TEST_CASE("projector on nonzero modes") {
    GridSpec g = small_grid();
    double h = 0.1, a = 3.0;
    OperatorMatrix Pi = projector_nonzero(g, a, h);
    CHECK(Pi.mul(Pi).add(Pi, 1.0, -1.0).op_norm() < 1e-12);
    CHECK(Pi.add(Pi.adjoint(), 1.0, -1.0).op_norm() < 1e-12);

    // mode-0 function supported in {y > a} is annihilated
    DiscreteFunction f0 = DiscreteFunction::from_function(g, [&](double y, double) {
        return Cpx(y > 4.0 ? std::exp(-std::pow(std::log(y / 6.0), 2) * 8.0) : 0.0, 0.0);
    });
    CHECK(Pi.apply(f0).norm() < 1e-14);
    // pure nonzero mode passes through
    DiscreteFunction f1 = DiscreteFunction::from_function(g, [](double y, double th) {
        return Cpx(std::exp(-std::pow(std::log(y / 3.0), 2) * 6.0), 0.0) *
               std::exp(Cpx(0.0, 2.0 * M_PI * th));
    });
    DiscreteFunction diff = Pi.apply(f1);
    diff.modes -= f1.modes;
    CHECK(diff.norm() < 1e-12 * f1.norm());
}

TEST_CASE("discrete Parseval between theta grid and modes") {
    GridSpec g = small_grid();
    DiscreteFunction f = DiscreteFunction::from_function(g, [](double y, double th) {
        return Cpx(std::exp(-std::pow(std::log(y / 3.0), 2) * 4.0), 0.0) *
               (1.0 + 0.7 * std::cos(2.0 * M_PI * th) +
                Cpx(0.0, 0.3) * std::sin(4.0 * M_PI * th));
    });
    auto w = g.weights();
    Eigen::MatrixXcd samples = f.to_theta_grid();
    double grid_norm2 = 0.0;
    for (int j = 0; j < g.n_y; ++j)
        for (int q = 0; q < g.n_theta; ++q)
            grid_norm2 += std::norm(samples(j, q)) * w[j] / g.n_theta;
    CHECK(std::sqrt(grid_norm2) == doctest::Approx(f.norm()).epsilon(1e-12));
}

TEST_CASE("schur bound dominates the operator norm") {
    GridSpec g = small_grid();
    double h = 0.1;
    // diagonal multiplication by g(y): C >= ||g||_inf^2 and ||M|| = ||g||_inf
    Symbol w = make_y_window(2.0, 6.0, 0.4);
    OperatorMatrix D = multiplication_matrix(w, g, h);
    double C = schur_bound(D, -1.0);
    double nrm = D.op_norm();
    CHECK(nrm == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(C >= nrm * nrm * (1.0 - 1e-10));

    // quantized bump at the lemma's admissible tau for d = 1
    Symbol s = std_bump();
    OperatorMatrix M = op_matrix(s, h, g);
    double tau = -1.5;  // in (-(d+1)/2 - 1, -(d+1)/2)
    double CM = schur_bound(M, tau);
    CHECK(std::isfinite(CM));
    CHECK(M.op_norm() * M.op_norm() <= CM * 1.05);
}

TEST_CASE("pointwise kernel symmetries") {
    GridSpec g = small_grid();
    double h = 0.1;
    Symbol s = std_bump(0.4);  // real, theta-dependent
    PhasePoint x = PhasePoint::d1(3.0, 0.15, 0, 0);
    PhasePoint xp = PhasePoint::d1(3.35, 0.55, 0, 0);
    // hermitian kernel of a real symbol, in the L^2(Z)-weighted form
    // K(x, x') = conj(K(x', x)) (y/y')^{d+1}
    Cpx k1 = weyl_kernel(s, h, x, xp, g);
    Cpx k2 = weyl_kernel(s, h, xp, x, g);
    double wfac = std::pow(x.y / xp.y, g.chart.d + 1.0);
    CHECK(std::abs(k1 - std::conj(k2) * wfac) < 1e-9 * std::abs(k1));
    // translation invariance in theta
    for (double lam : {0.3, 0.77}) {
        PhasePoint xs = x, xps = xp;
        xs.theta[0] += lam;
        xps.theta[0] += lam;
        Cpx k3 = weyl_kernel(s, h, xs, xps, g);
        CHECK(std::abs(k3 - k1) < 1e-9 * std::abs(k1));
    }
}

TEST_CASE("mode-route kernel matches the lattice-translate oracle") {
    GridSpec g = small_grid();
    double h = 0.1;
    Symbol s = std_bump(0.4);
    PhasePoint x = PhasePoint::d1(3.0, 0.2, 0, 0);
    PhasePoint xp = PhasePoint::d1(3.2, 0.6, 0, 0);
    Cpx via_modes = weyl_kernel(s, h, x, xp, g);
    auto via_translates = weyl_kernel_translates(s, h, x, xp, g);
    CHECK(!via_translates.truncation_warning);
    CHECK(via_translates.translates_used >= 5);
    CHECK(std::abs(via_modes - via_translates.value) < 1e-6 * std::abs(via_modes));
}

TEST_CASE("kernel values converge under quadrature refinement") {
    GridSpec g = small_grid();
    double h = 0.1;
    Symbol s = std_bump();
    PhasePoint x = PhasePoint::d1(3.0, 0.0, 0, 0);
    PhasePoint xp = PhasePoint::d1(3.4, 0.0, 0, 0);
    GridSpec g2 = g;
    g2.n_quad_y = 2 * g.n_quad_y;
    g2.n_theta = 2 * g.n_theta;
    Cpx a = weyl_kernel(s, h, x, xp, g);
    Cpx b = weyl_kernel(s, h, x, xp, g2);
    CHECK(std::abs(a - b) < 1e-6 * std::abs(b));
}

TEST_CASE("op_matrix quadratic form converges under grid refinement") {
    GridSpec g = small_grid();
    g.n_y = 96;
    double h = 0.1;
    Symbol s = std_bump();
    auto probe = [&](const GridSpec& gr) {
        OperatorMatrix M = op_matrix(s, h, gr);
        DiscreteFunction f = DiscreteFunction::from_function(gr, [](double y, double) {
            return Cpx(std::exp(-8.0 * std::pow(std::log(y / 3.2), 2)), 0.0);
        });
        return M.apply(f).inner(f);
    };
    GridSpec fine = g;
    fine.n_y = 2 * g.n_y - 1;  // refinement
    fine.n_quad_y = 2 * g.n_quad_y;
    Cpx a = probe(g), b = probe(fine);
    CHECK(std::abs(a - b) < 2e-6 * std::abs(b));
}

TEST_CASE("binary matrix round trip") {
    Eigen::MatrixXcd m(3, 2);
    m << Cpx(1, 2), Cpx(0, -1), Cpx(3.5, 0), Cpx(-2, 0.25), Cpx(0, 0), Cpx(1e-12, 7);
    std::string path = "/tmp/cuspml_test_matrix.bin";
    write_matrix_binary(m, path);
    Eigen::MatrixXcd r = read_matrix_binary(path);
    CHECK((m - r).norm() == doctest::Approx(0.0));
}

TEST_CASE("separable fast path agrees with the generic quadrature") {
    GridSpec g;
    g.y_min = 1.0;
    g.y_max = 12.0;
    g.n_y = 100;
    g.n_theta = 12;
    g.mode_max = 2;
    BumpParams p;
    p.y_lo = 2.0;
    p.y_hi = 5.5;
    p.edge = 0.35;
    p.theta_beta = 0.4;
    p.cY = 0.2;
    p.wY = 0.45;
    p.cJ = 0.1;
    p.wJ = 0.4;
    Symbol fast = make_bump(p);
    Symbol slow = fast;
    slow.separable.reset();
    OperatorMatrix Mf = op_matrix(fast, 0.1, g);
    OperatorMatrix Ms = op_matrix(slow, 0.1, g);
    double rel = Mf.add(Ms, 1.0, -1.0).op_norm() / Ms.op_norm();
    CHECK(rel < 1e-7);
}
