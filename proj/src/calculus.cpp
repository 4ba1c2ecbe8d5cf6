#include "cuspml/calculus.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace cuspml {

namespace {

const double kTwoPi = 6.283185307179586476925287;

SupportHint product_support(const Symbol& a, const Symbol& b) {
    return symbol_mul(a, b).support;
}

// pairs (x_c, xi_c): raw coordinate indices for d = 1
struct Pairing {
    int x;
    int xi;
};
const Pairing kPairs[2] = {{0, 2}, {1, 3}};

}  // namespace

Symbol ExpansionResult::combined() const {
    Symbol s;
    if (terms.empty()) return symbol_zero(1);
    s.d = terms[0].d;
    s.order = terms[0].order;
    s.rho = terms[0].rho;
    s.support = terms[0].support;
    auto list = std::make_shared<std::vector<Symbol>>(terms);
    s.eval_fn = [list](double h, const PhasePoint& p) {
        Cpx acc(0.0, 0.0);
        double hk = 1.0;
        for (const auto& t : *list) {
            acc += hk * t(h, p);
            hk *= h;
        }
        return acc;
    };
    return s;
}

ExpansionResult moyal_compose(const Symbol& a, const Symbol& b, int K) {
    if (K < 0 || K > 2)
        throw std::invalid_argument("moyal_compose: K in {0, 1, 2} supported");
    if (K >= 2 && (!a.has_analytic_second() || !b.has_analytic_second()))
        throw std::invalid_argument("moyal_compose: K >= 2 needs analytic second partials");
    ExpansionResult res;
    res.order_K = K;
    auto A = std::make_shared<Symbol>(a);
    auto B = std::make_shared<Symbol>(b);
    SupportHint sup = product_support(a, b);

    // k = 0: a b
    res.terms.push_back(symbol_mul(a, b));
    res.terms.back().support = sup;

    if (K >= 1) {
        // k = 1: (i/2) [ sum_c dx_c a dxi_c b - dxi_c a dx_c b ]
        Symbol c1;
        c1.d = a.d;
        c1.order = a.order + b.order - 1.0;
        c1.support = sup;
        c1.eval_fn = [A, B](double h, const PhasePoint& p) {
            Cpx acc(0.0, 0.0);
            for (const auto& pr : kPairs) {
                acc += A->partial(h, p, pr.x) * B->partial(h, p, pr.xi) -
                       A->partial(h, p, pr.xi) * B->partial(h, p, pr.x);
            }
            return Cpx(0.0, 0.5) * acc;
        };
        res.terms.push_back(std::move(c1));
    }
    if (K >= 2) {
        // k = 2: -(1/8)[S20 + S02] + (1/4) S11
        Symbol c2;
        c2.d = a.d;
        c2.order = a.order + b.order - 2.0;
        c2.support = sup;
        c2.eval_fn = [A, B](double h, const PhasePoint& p) {
            Cpx s20(0.0, 0.0), s02(0.0, 0.0), s11(0.0, 0.0);
            for (const auto& p1 : kPairs)
                for (const auto& p2 : kPairs) {
                    s20 += A->partial2(h, p, p1.x, p2.x) * B->partial2(h, p, p1.xi, p2.xi);
                    s02 += A->partial2(h, p, p1.xi, p2.xi) * B->partial2(h, p, p1.x, p2.x);
                    s11 += A->partial2(h, p, p1.x, p2.xi) * B->partial2(h, p, p1.xi, p2.x);
                }
            return -0.125 * (s20 + s02) + 0.25 * s11;
        };
        res.terms.push_back(std::move(c2));
    }
    // crude scale estimate for the first dropped term
    double feat = std::max(res.terms[0].support.xi_feature, 0.05);
    PhasePoint probe = PhasePoint::d1(
        sup.has_y ? std::sqrt(sup.y_lo * sup.y_hi) : 2.0, 0.0, 0.0, 0.0);
    res.next_term_estimate = std::abs(res.terms.back()(0.1, probe)) / feat;
    return res;
}

ExpansionResult change_quantization_expansion(const Symbol& a, double t_from,
                                              double t_to, int K) {
    if (K < 0 || K > 1)
        throw std::invalid_argument(
            "change_quantization_expansion: K in {0, 1} supported (higher orders need "
            "fourth partials)");
    if (K >= 1 && !a.has_analytic_second())
        throw std::invalid_argument(
            "change_quantization_expansion: K >= 1 needs analytic second partials");
    ExpansionResult res;
    res.order_K = K;
    auto A = std::make_shared<Symbol>(a);
    res.terms.push_back(a);
    if (K >= 1) {
        const double c = t_from - t_to;  // b = exp(i c h grad.grad) a
        Symbol c1;
        c1.d = a.d;
        c1.order = a.order - 1.0;
        c1.support = a.support;
        c1.eval_fn = [A, c](double h, const PhasePoint& p) {
            Cpx acc(0.0, 0.0);
            for (const auto& pr : kPairs) acc += A->partial2(h, p, pr.x, pr.xi);
            return Cpx(0.0, c) * acc;
        };
        res.terms.push_back(std::move(c1));
    }
    res.next_term_estimate = std::abs(t_from - t_to);
    return res;
}

Cpx t1_oracle(const TwoPointSymbol& s2, double h, const PhasePoint& base,
              int nodes_hint) {
    const double r = s2.v_radius, W = s2.V_radius;
    double phase = r * W / h;
    int n1 = nodes_hint > 0 ? nodes_hint
                            : std::max(24, static_cast<int>(std::ceil(phase * 0.9)));
    if (n1 > 140) n1 = 140;
    const auto& [xs, ws] = gauss_legendre(n1);

    Cpx acc(0.0, 0.0);
    PhasePoint p1 = base;
    for (int iv = 0; iv < n1; ++iv) {
        double vy = r * xs[iv];
        for (int it = 0; it < n1; ++it) {
            double vt = r * xs[it];
            p1.y = base.y + vy;
            p1.theta[0] = base.theta[0] + vt;
            Cpx inner(0.0, 0.0);
            for (int iV = 0; iV < n1; ++iV) {
                double VY = W * xs[iV];
                for (int iJ = 0; iJ < n1; ++iJ) {
                    double VJ = W * xs[iJ];
                    p1.Y = base.Y + VY;
                    p1.J[0] = base.J[0] + VJ;
                    Cpx val = s2.eval(base, p1);
                    if (val == Cpx(0.0, 0.0)) continue;
                    double ang = (vy * VY + vt * VJ) / h;
                    inner += ws[iV] * ws[iJ] * val * Cpx(std::cos(ang), std::sin(ang));
                }
            }
            acc += ws[iv] * ws[it] * inner;
        }
    }
    acc *= r * r * W * W;  // Jacobians of the [-1,1] maps
    return acc / std::pow(kTwoPi * h, 2.0);
}

namespace {

// central mixed second difference of s2 in the second-pair coordinates
Cpx pair_derivative(const TwoPointSymbol& s2, const PhasePoint& base, int cx, int cxi,
                    double step) {
    auto ev = [&](double dx, double dxi) {
        PhasePoint p1 = base;
        if (cx == 0) p1.y += dx;
        else p1.theta[0] += dx;
        if (cxi == 2) p1.Y += dxi;
        else p1.J[0] += dxi;
        return s2.eval(base, p1);
    };
    return (ev(step, step) - ev(step, -step) - ev(-step, step) + ev(-step, -step)) /
           (4.0 * step * step);
}

// (grad_x1 . grad_xi1)^2 by nested central differences
Cpx pair_derivative2(const TwoPointSymbol& s2, const PhasePoint& base, double step) {
    auto shift = [&](const PhasePoint& q, int c, double s) {
        PhasePoint p = q;
        if (c == 0) p.y += s;
        else if (c == 1) p.theta[0] += s;
        else if (c == 2) p.Y += s;
        else p.J[0] += s;
        return p;
    };
    // D = sum_{pairs (a,b)} d_a d_b ; apply D twice via 4-point stencils
    auto applyD = [&](const std::function<Cpx(const PhasePoint&)>& f,
                      const PhasePoint& q) {
        Cpx acc(0.0, 0.0);
        for (const auto& pr : kPairs) {
            acc += (f(shift(shift(q, pr.x, step), pr.xi, step)) -
                    f(shift(shift(q, pr.x, step), pr.xi, -step)) -
                    f(shift(shift(q, pr.x, -step), pr.xi, step)) +
                    f(shift(shift(q, pr.x, -step), pr.xi, -step))) /
                   (4.0 * step * step);
        }
        return acc;
    };
    auto inner = [&](const PhasePoint& q) { return s2.eval(base, q); };
    auto outer = [&](const PhasePoint& q) { return applyD(inner, q); };
    return applyD(outer, base);
}

}  // namespace

Cpx t1_expansion_term(const TwoPointSymbol& s2, int s, const PhasePoint& base, double h) {
    if (s == 0) return s2.eval(base, base);
    const double step = 2e-3;
    if (s == 1) {
        Cpx acc(0.0, 0.0);
        for (const auto& pr : kPairs) acc += pair_derivative(s2, base, pr.x, pr.xi, step);
        return Cpx(0.0, h) * acc;
    }
    if (s == 2) {
        Cpx d2 = pair_derivative2(s2, base, 6e-3);
        return -0.5 * h * h * d2;
    }
    throw std::invalid_argument("t1_expansion_term: s <= 2");
}

double composition_residual(const Symbol& a, const Symbol& b, int K, double h,
                            const GridSpec& grid) {
    OperatorMatrix Ma = op_matrix(a, h, grid);
    OperatorMatrix Mb = op_matrix(b, h, grid);
    ExpansionResult ck = moyal_compose(a, b, K);
    OperatorMatrix Mc = op_matrix(ck.combined(), h, grid);
    return Ma.mul(Mb).add(Mc, 1.0, -1.0).op_norm();
}

double commutator_residual(const Symbol& a, const Symbol& b, double h,
                           const GridSpec& grid) {
    OperatorMatrix Ma = op_matrix(a, h, grid);
    OperatorMatrix Mb = op_matrix(b, h, grid);
    OperatorMatrix Mbr = op_matrix(poisson(a, b), h, grid);
    OperatorMatrix comm = Ma.mul(Mb).add(Mb.mul(Ma), 1.0, -1.0);
    return comm.add(Mbr.scale(Cpx(0.0, -h)), 1.0, -1.0).op_norm();
}

L2Check l2_norm_check(const Symbol& a, double h, const GridSpec& grid) {
    L2Check out;
    out.norm = op_matrix(a, h, grid).op_norm();
    double lo = a.support.has_y ? a.support.y_lo : grid.y_min;
    double hi = a.support.has_y ? a.support.y_hi : grid.y_max;
    double xi_cap = a.support.has_energy ? std::sqrt(2.0 * a.support.energy) : 6.0;
    double sup = 0.0;
    for (int iy = 0; iy <= 80; ++iy) {
        double y = lo * std::pow(hi / lo, iy / 80.0);
        for (int it = 0; it < 8; ++it)
            for (int iY = -40; iY <= 40; ++iY)
                for (int iJ = -8; iJ <= 8; ++iJ) {
                    PhasePoint p = PhasePoint::d1(y, it / 8.0, xi_cap * iY / (40.0 * y),
                                                  xi_cap * iJ / (8.0 * y));
                    sup = std::max(sup, std::abs(a(h, p)));
                }
    }
    out.sup = sup;
    out.gap = out.norm - sup;
    return out;
}

HSCheck hs_parseval(const Symbol& a, double h, const GridSpec& grid) {
    HSCheck out;
    // formula side: (2 pi h)^{-1} sum_{m != 0} int dy dtheta dY |a(y,theta,Y,2 pi h m)|^2
    double lo = a.support.has_y ? a.support.y_lo : grid.y_min;
    double hi = a.support.has_y ? a.support.y_hi : grid.y_max;
    if (!a.support.has_energy)
        throw std::invalid_argument("hs_parseval: needs an energy support hint");
    double xi_cap = std::sqrt(2.0 * a.support.energy * 1.05);
    const int ny = 160, nY = 160, nt = std::max(1, 2 * a.support.theta_modes + 2);
    const auto& [xs, ws] = gauss_legendre(nY);
    double total = 0.0;
    int m_cap = static_cast<int>(std::ceil(xi_cap / (kTwoPi * h * lo))) + 1;
    for (int m = -m_cap; m <= m_cap; ++m) {
        if (m == 0) continue;
        double J = kTwoPi * h * m;
        for (int iy = 0; iy < ny; ++iy) {
            double u0 = std::log(lo), u1 = std::log(hi);
            double u = u0 + (u1 - u0) * (iy + 0.5) / ny;
            double y = std::exp(u);
            double wy = (u1 - u0) / ny * y;  // dy = y du
            double avail = 2.0 * a.support.energy * 1.05 - y * y * J * J;
            if (avail <= 0.0) continue;
            double Ym = std::sqrt(avail) / y;
            for (int iY = 0; iY < nY; ++iY) {
                double Y = Ym * xs[iY];
                double acc = 0.0;
                for (int it = 0; it < nt; ++it)
                    acc += std::norm(a(h, PhasePoint::d1(y, static_cast<double>(it) / nt,
                                                         Y, J)));
                total += wy * Ym * ws[iY] * acc / nt;
            }
        }
    }
    out.formula = total / (kTwoPi * h);

    OperatorMatrix M1 = op_matrix(a, h, grid, 1.0);
    OperatorMatrix Pi = projector_nonzero(grid, grid.y_min * (1.0 - 1e-12), h);
    double fro = M1.mul(Pi).frobenius();
    out.frobenius = fro * fro;
    out.rel_gap = std::abs(out.formula - out.frobenius) /
                  std::max(out.formula, out.frobenius);
    return out;
}

double phase_space_integral(const Symbol& a, double h) {
    if (!a.support.has_y || !a.support.has_energy)
        throw std::invalid_argument("phase_space_integral: needs y and energy hints");
    double lo = a.support.y_lo, hi = a.support.y_hi;
    double xi_cap = std::sqrt(2.0 * a.support.energy * 1.05);
    const int ny = 140, nxi = 140, nt = std::max(1, 2 * a.support.theta_modes + 2);
    const auto& [xs, ws] = gauss_legendre(nxi);
    double total = 0.0;
    for (int iy = 0; iy < ny; ++iy) {
        double u0 = std::log(lo), u1 = std::log(hi);
        double u = u0 + (u1 - u0) * (iy + 0.5) / ny;
        double y = std::exp(u);
        double wy = (u1 - u0) / ny * y;
        double cap = xi_cap / y;
        for (int iY = 0; iY < nxi; ++iY)
            for (int iJ = 0; iJ < nxi; ++iJ) {
                double Y = cap * xs[iY], J = cap * xs[iJ];
                double acc = 0.0;
                for (int it = 0; it < nt; ++it) {
                    Cpx v = a(h, PhasePoint::d1(y, static_cast<double>(it) / nt, Y, J));
                    acc += v.real();
                }
                total += wy * cap * cap * ws[iY] * ws[iJ] * acc / nt;
            }
    }
    return total;
}

TraceCheck trace_check(const Symbol& a, const Symbol& chi, double h,
                       const GridSpec& grid) {
    TraceCheck out;
    OperatorMatrix M1 = op_matrix(a, h, grid, 1.0);
    OperatorMatrix X = multiplication_matrix(chi, grid, h);
    OperatorMatrix Pi = projector_nonzero(grid, grid.y_min * (1.0 - 1e-12), h);
    out.trace = X.mul(M1).mul(X).mul(Pi).trace().real();

    Symbol chi2a = symbol_mul(symbol_mul(chi, chi), a);
    double integral = phase_space_integral(chi2a, h);
    out.leading = integral / (h * h * kTwoPi * kTwoPi);
    out.gap = std::abs(h * h * out.trace - integral / (kTwoPi * kTwoPi));

    // standalone Riemann-sum lemma: h^2 | sum_{m != 0} int a(x, hY, 2 pi h m)
    // - (2 pi h^2)^{-1} int a |
    if (!a.support.has_energy || !a.support.has_y)
        throw std::invalid_argument("trace_check: needs y and energy hints");
    double lo = a.support.y_lo, hi = a.support.y_hi;
    double xi_cap = std::sqrt(2.0 * a.support.energy * 1.05);
    const int ny = 160, nY = 160;
    const auto& [xs, ws] = gauss_legendre(nY);
    double S = 0.0;
    int m_cap = static_cast<int>(std::ceil(xi_cap / (kTwoPi * h * lo))) + 1;
    for (int m = -m_cap; m <= m_cap; ++m) {
        if (m == 0) continue;
        double J = kTwoPi * h * m;
        for (int iy = 0; iy < ny; ++iy) {
            double u0 = std::log(lo), u1 = std::log(hi);
            double u = u0 + (u1 - u0) * (iy + 0.5) / ny;
            double y = std::exp(u);
            double wy = (u1 - u0) / ny * y;
            double avail = 2.0 * a.support.energy * 1.05 - y * y * J * J;
            if (avail <= 0.0) continue;
            double Ym = std::sqrt(avail) / (y * h);  // substitute hY = Y'
            for (int iY = 0; iY < nY; ++iY) {
                double Y = Ym * xs[iY];
                Cpx v = a(h, PhasePoint::d1(y, 0.0, h * Y, J));
                S += wy * Ym * ws[iY] * v.real();
            }
        }
    }
    double full = phase_space_integral(a, h);
    out.riemann_gap = h * h * std::abs(S - full / (kTwoPi * h * h));
    return out;
}

double function_of_p_residual(const std::function<double(double)>& f,
                              const Symbol& fp_symbol, const Symbol& chi_in,
                              double h, const GridSpec& grid) {
    auto lap = laplacian_blocks(h, grid);
    auto sp = spectral_p(lap);
    OperatorMatrix fP = sp.map_function(f);
    OperatorMatrix Mfp = op_matrix(fp_symbol, h, grid, 0.5, false);
    OperatorMatrix X = multiplication_matrix(chi_in, grid, h);
    return X.mul(fP.add(Mfp, 1.0, -1.0)).mul(X).op_norm();
}

double pseudolocality_norm(const Symbol& sigma, double h, const GridSpec& grid,
                           const std::function<double(double)>& eta) {
    OperatorMatrix M = op_matrix(sigma, h, grid);
    return mask_kernel(M, eta).op_norm();
}

double loglog_slope(const std::vector<double>& hs, const std::vector<double>& vals) {
    if (hs.size() != vals.size() || hs.size() < 2)
        throw std::invalid_argument("loglog_slope: need matching lists, size >= 2");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (size_t k = 0; k < hs.size(); ++k) {
        if (!(vals[k] > 0.0)) continue;
        double x = std::log(hs[k]), y = std::log(vals[k]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 2) throw std::invalid_argument("loglog_slope: not enough positive values");
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace cuspml
