#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "cuspml/geometry.hpp"
#include "json.hpp"

namespace cuspml {

using Cpx = std::complex<double>;

// Coordinate indices for raw partial derivatives:
//   0 = y, 1..d = theta_i, d+1 = Y, d+2..2d+1 = J_i.
inline int coord_count(int d) { return 2 * d + 2; }

// Frame field indices: 0 = X_y, 1..d = X_theta_i, d+1 = X_Y, d+2.. = X_J_i.
// X_y = y d/dy, X_theta = y d/dtheta, X_Y = (1/y) d/dY, X_J = (1/y) d/dJ.

struct SupportHint {
    bool has_y = false;
    double y_lo = 0.0, y_hi = 0.0;  // closed y-interval of the support
    bool has_energy = false;
    double energy = 0.0;            // sigma = 0 where p > energy
    int theta_modes = 0;            // max |Fourier mode| in theta (0: theta-independent)
    // smallest variation scale in the yY variable; fixes the quadrature node
    // count so that assembled matrices are exactly linear in the symbol
    // (0 = unknown, quadrature then adapts by convergence checking)
    double xi_feature = 0.0;
};

inline double combine_features(double a, double b) {
    if (a <= 0.0) return b;
    if (b <= 0.0) return a;
    return a < b ? a : b;
}

// Optional factored form sigma = rest(h, y, theta, J) * gprof(y Y): the
// quantization then reduces the Y integral to one precomputed 1D Fourier
// transform of gprof.
struct SeparableXi {
    std::function<Cpx(double h, double y, double theta, double J)> rest;
    std::function<double(double)> gprof;  // real profile in v = y Y
    double v_lo = -1.0, v_hi = 1.0;       // support of gprof
};

// A symbol on T*Z: evaluation plus optional analytic first/second raw partials.
// Partials absent fall back to Richardson-extrapolated central differences with
// step 1e-5 (1 + |coordinate|).
struct Symbol {
    int d = 1;
    double order = 0.0;
    double rho = 0.0;
    SupportHint support;

    std::function<Cpx(double h, const PhasePoint&)> eval_fn;
    std::function<Cpx(double h, const PhasePoint&, int)> d1_fn;        // optional
    std::function<Cpx(double h, const PhasePoint&, int, int)> d2_fn;   // optional
    std::shared_ptr<SeparableXi> separable;                            // optional

    bool in_support(const PhasePoint& p) const;
    Cpx operator()(double h, const PhasePoint& p) const;
    // first partial in raw coordinate c
    Cpx partial(double h, const PhasePoint& p, int c) const;
    // second partial in raw coordinates (c1, c2)
    Cpx partial2(double h, const PhasePoint& p, int c1, int c2) const;
    bool has_analytic_partials() const { return static_cast<bool>(d1_fn); }
    bool has_analytic_second() const { return static_cast<bool>(d2_fn); }
};

// Linear-combination helpers (pointwise; partials combined when available).
Symbol symbol_zero(int d);
Symbol symbol_const(int d, Cpx c);
Symbol symbol_add(const Symbol& a, const Symbol& b, Cpx ca = 1.0, Cpx cb = 1.0);
Symbol symbol_mul(const Symbol& a, const Symbol& b);
Symbol symbol_scale(const Symbol& a, Cpx c);
Symbol symbol_conj(const Symbol& a);

// X_idx sigma for a single frame index. Order drops by one for Y/J fields.
Symbol apply_field(const Symbol& s, int field);
Symbol apply_field_word(const Symbol& s, const std::vector<int>& word);

// sup over the grid of |X_alpha sigma| / <y xi>^(n - (alpha)) with
// <u> = sqrt(1 + u^2); (alpha) counts Y/J entries.  For rho > 0 the value is
// scaled by h^(rho |alpha|).
double seminorm(const Symbol& s, double n, const std::vector<int>& alpha,
                const std::vector<PhasePoint>& grid, double h);

// Sample grid per the seminorm conventions: log-uniform in y over the support,
// uniform theta over the cell, tensor (Y, J) covering |y xi| <= xi_max.
std::vector<PhasePoint> seminorm_grid(const Symbol& s, const CuspChart& chart,
                                      int n_y, int n_theta, int n_xi,
                                      double xi_max = 20.0);

// Poisson bracket {a,b} = dY a dy b - dy a dY b + dJ a . dtheta b - dtheta a . dJ b.
Symbol poisson(const Symbol& a, const Symbol& b);

// --- differential operators -------------------------------------------------

// One term h^(|word| + i) coeff(x) X_word, coefficient an x-only symbol.
struct DiffOpTerm {
    int i = 0;
    std::vector<int> word;  // letters 0 = y, 1..d = theta_i
    Symbol coeff;
};

struct DiffOp {
    int d = 1;
    std::vector<DiffOpTerm> terms;
};

// Composition with Leibniz normal ordering; coefficients need first partials
// (analytic or finite-difference).
DiffOp diffop_compose(const DiffOp& A, const DiffOp& B);

// Principal symbol: terms with i > 0 drop; X_word maps to prod (i y xi_w).
Symbol principal_symbol(const DiffOp& D);

// --- concrete symbols --------------------------------------------------------

// C-infinity monotone step: 0 for t <= 0, 1 for t >= 1, with two derivatives.
void smoothstep_c2(double t, double out[3]);

// chi_s(y) = step(ln(y/a) - s): equals 1 for ln(y/a) <= s + ln 4 and 0 for
// ln(y/a) >= s + ln 5.  Derivatives bounded uniformly in s.
Symbol make_cusp_cutoff(double s, const CuspChart& chart);

// Base cutoff chi(y): 0 for y <= 2a, 1 for y >= 3a.
Symbol make_base_cutoff(const CuspChart& chart);

// Plateau window in ln y: supported on [y_lo, y_hi], identically 1 on
// [y_lo e^L, y_hi e^-L].
Symbol make_y_window(double y_lo, double y_hi, double L, int d = 1);

// Separable bump b1(y) b2(theta) b3(yY) b4(yJ):
//   b1 plateau window, b2 = 1 + beta cos(2 pi k theta_1),
//   b3, b4 Gaussians in yY and yJ_1 with centers c and widths w.
struct BumpParams {
    double y_lo = 2.0, y_hi = 5.0, edge = 0.35;
    double theta_beta = 0.0;
    int theta_mode = 1;
    double cY = 0.0, wY = 0.18;
    double cJ = 0.0, wJ = 0.18;
};
Symbol make_bump(const BumpParams& p, int d = 1);

// f(p) Gaussian in the Hamiltonian, times an optional plateau y-window.
Symbol make_gaussian_p(double p0, double wp, std::optional<BumpParams> window,
                       int d = 1);

// JSON recipe -> symbol (CLI configs).  Recognised names: "bump",
// "gaussian_p", "cusp_cutoff", "constant".
Symbol symbol_from_recipe(const nlohmann::json& recipe, const CuspChart& chart);

}  // namespace cuspml
