#pragma once

#include "cuspml/quantize.hpp"

namespace cuspml {

// Terms of a semiclassical expansion: the symbol is sum_k h^k terms[k].
struct ExpansionResult {
    std::vector<Symbol> terms;
    int order_K = 0;
    double next_term_estimate = 0.0;

    // single symbol evaluating the truncated sum with the h passed at
    // evaluation time
    Symbol combined() const;
};

// Product expansion c ~ sum over alpha in N^2 of
//   (-1)^{alpha_2} (i h)^{|alpha|} / (2^{|alpha|} alpha!)
//   (grad_x1 . grad_xi2)^{alpha_1} (grad_x2 . grad_xi1)^{alpha_2} a(x1,xi1) b(x2,xi2)
// restricted to the diagonal; terms up to |alpha| <= K (K <= 2 needs analytic
// second partials).
ExpansionResult moyal_compose(const Symbol& a, const Symbol& b, int K);

// Symbol b with Op^{t_to}(b) = Op^{t_from}(a) + O(h^{K+1}):
//   b = exp(-i (t_to - t_from) h grad_x . grad_xi) a truncated at order K.
// The spec form (t_from = 1/2) has first correction i h (1/2 - t) grad.grad a.
ExpansionResult change_quantization_expansion(const Symbol& a, double t_from,
                                              double t_to, int K);
inline ExpansionResult change_quantization_expansion(const Symbol& a, double t, int K) {
    return change_quantization_expansion(a, 0.5, t, K);
}

// --- stationary-phase oracle --------------------------------------------------

// Two-point symbol sigma(x, xi; x1, xi1) for the T_1 quadrature oracle.
struct TwoPointSymbol {
    std::function<Cpx(const PhasePoint&, const PhasePoint&)> eval;
    double v_radius = 0.4;   // support radius in x1 - x (both components)
    double V_radius = 2.0;   // integration window in xi1 - xi
};

// Brute-force T_1 sigma(x, xi, h) =
//   (2 pi h)^{-2} int exp(i <v, V> / h) sigma(x, xi; x+v, xi+V) dv dV.
Cpx t1_oracle(const TwoPointSymbol& s2, double h, const PhasePoint& base,
              int nodes_hint = 0);

// s-th expansion term (i h)^s / s! (grad_x1 . grad_xi1)^s sigma at the diagonal,
// derivatives by finite differences on the second pair; s <= 2.
Cpx t1_expansion_term(const TwoPointSymbol& s2, int s, const PhasePoint& base,
                      double h);

// --- residual checks ----------------------------------------------------------

double composition_residual(const Symbol& a, const Symbol& b, int K, double h,
                            const GridSpec& grid);

// || [M(a), M(b)] - (h/i) M({a,b}) ||
double commutator_residual(const Symbol& a, const Symbol& b, double h,
                           const GridSpec& grid);

struct L2Check {
    double norm = 0.0;     // largest singular value of M(a)
    double sup = 0.0;      // grid sup of |a|
    double gap = 0.0;      // norm - sup
};
L2Check l2_norm_check(const Symbol& a, double h, const GridSpec& grid);

struct HSCheck {
    double formula = 0.0;    // (2 pi h)^{-1} sum_{m != 0} int |a(y,theta,Y,2 pi h m)|^2
    double frobenius = 0.0;  // ||Op^1(a) Pi*||_HS on the grid
    double rel_gap = 0.0;
};
HSCheck hs_parseval(const Symbol& a, double h, const GridSpec& grid);

struct TraceCheck {
    double trace = 0.0;         // Re Tr[chi M^1(a) chi Pi*]
    double leading = 0.0;       // h^{-2} (2 pi)^{-2} int chi^2 a
    double gap = 0.0;           // |h^2 trace - (2 pi)^{-2} int chi^2 a|
    double riemann_gap = 0.0;   // standalone Riemann-sum lemma gap (times h^2)
};
TraceCheck trace_check(const Symbol& a, const Symbol& chi, double h,
                       const GridSpec& grid);

// || chi_in (f(P) - M(f o p)) chi_in ||; fp_symbol must evaluate f(p(x, xi)).
double function_of_p_residual(const std::function<double(double)>& f,
                              const Symbol& fp_symbol, const Symbol& chi_in,
                              double h, const GridSpec& grid);

// Operator norm of the kernel masked by eta(y'/y - y/y').
double pseudolocality_norm(const Symbol& sigma, double h, const GridSpec& grid,
                           const std::function<double(double)>& eta);

// phase-space integral over T*Z of a symbol (theta-independent path uses one
// theta node), by tensor Gauss-Legendre over the support
double phase_space_integral(const Symbol& a, double h);

// least-squares slope of log(val) against log(h)
double loglog_slope(const std::vector<double>& hs, const std::vector<double>& vals);

}  // namespace cuspml
