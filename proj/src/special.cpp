#include "cuspml/special.hpp"

#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "cuspml/geometry.hpp"

namespace cuspml {

namespace {

const double kPi = 3.14159265358979323846;

// K_nu(x) by the cosh-integral in MPFR, with enough precision to absorb the
// oscillatory cancellation (guard digits supplied by the caller).
Cpx bessel_k_mp(Cpx nu, double x, double digits) {
    const mpfr_prec_t prec = static_cast<mpfr_prec_t>(64 + digits * 3.4);
    const double eta = nu.real(), T = nu.imag();
    // truncation: x (cosh u - 1) - |eta| u > required decades
    const double decades = digits + 20.0;
    double umax = 1.0;
    for (int it = 0; it < 64; ++it) {
        double need = 1.0 + (decades * 2.302585 + std::abs(eta) * umax) / x;
        double next = std::acosh(std::max(need, 1.5));
        if (std::abs(next - umax) < 1e-9) { umax = next; break; }
        umax = next;
    }
    const double step0 = std::min(0.05, 0.25 / (1.0 + std::abs(T)));

    mpfr_t u, c, e, arg, tr, ti, sr, si, t1, t2, hm;
    mpfr_inits2(prec, u, c, e, arg, tr, ti, sr, si, t1, t2, hm, (mpfr_ptr) nullptr);

    auto integrate = [&](double hstep, double& out_r, double& out_i) {
        mpfr_set_d(sr, 0.0, MPFR_RNDN);
        mpfr_set_d(si, 0.0, MPFR_RNDN);
        mpfr_set_d(hm, hstep, MPFR_RNDN);
        long n = static_cast<long>(umax / hstep) + 1;
        for (long k = 0; k <= n; ++k) {
            mpfr_mul_si(u, hm, k, MPFR_RNDN);  // nodes formed in full precision
            mpfr_cosh(c, u, MPFR_RNDN);          // cosh u
            mpfr_mul_d(e, c, -x, MPFR_RNDN);     // -x cosh u
            mpfr_exp(e, e, MPFR_RNDN);
            // cosh(nu u) = cosh(eta u) cos(T u) + i sinh(eta u) sin(T u)
            mpfr_mul_d(arg, u, eta, MPFR_RNDN);
            mpfr_cosh(t1, arg, MPFR_RNDN);
            mpfr_sinh(t2, arg, MPFR_RNDN);
            mpfr_mul_d(arg, u, T, MPFR_RNDN);
            mpfr_cos(tr, arg, MPFR_RNDN);
            mpfr_sin(ti, arg, MPFR_RNDN);
            mpfr_mul(tr, tr, t1, MPFR_RNDN);
            mpfr_mul(ti, ti, t2, MPFR_RNDN);
            mpfr_mul(tr, tr, e, MPFR_RNDN);
            mpfr_mul(ti, ti, e, MPFR_RNDN);
            if (k == 0) {
                mpfr_mul_d(tr, tr, 0.5, MPFR_RNDN);
                mpfr_mul_d(ti, ti, 0.5, MPFR_RNDN);
            }
            mpfr_add(sr, sr, tr, MPFR_RNDN);
            mpfr_add(si, si, ti, MPFR_RNDN);
        }
        mpfr_mul_d(sr, sr, hstep, MPFR_RNDN);
        mpfr_mul_d(si, si, hstep, MPFR_RNDN);
        out_r = mpfr_get_d(sr, MPFR_RNDN);
        out_i = mpfr_get_d(si, MPFR_RNDN);
    };

    double r1, i1, r2, i2;
    integrate(step0, r1, i1);
    integrate(0.5 * step0, r2, i2);
    double scale = std::abs(Cpx(r2, i2)) + 1e-300;
    if (std::abs(Cpx(r2 - r1, i2 - i1)) > 1e-11 * scale) {
        integrate(0.25 * step0, r1, i1);
        r2 = r1;
        i2 = i1;
    }
    mpfr_clears(u, c, e, arg, tr, ti, sr, si, t1, t2, hm, (mpfr_ptr) nullptr);
    return Cpx(r2, i2);
}

// Bernoulli numbers B_2, B_4, ..., B_30
const double kBernoulli[] = {
    1.0 / 6,     -1.0 / 30,    1.0 / 42,      -1.0 / 30,     5.0 / 66,
    -691.0 / 2730, 7.0 / 6,    -3617.0 / 510, 43867.0 / 798, -174611.0 / 330,
    854513.0 / 138, -236364091.0 / 2730, 8553103.0 / 6, -23749461029.0 / 870,
    8615841276005.0 / 14322};

}  // namespace

Cpx zeta(Cpx s) {
    if (std::abs(s - Cpx(1.0, 0.0)) < 1e-12)
        throw std::invalid_argument("zeta: pole at s = 1");
    // Direct terms: the asymptotic tail needs M beyond |Im s| / (2 pi).
    int M = 30;
    double t = std::abs(s.imag());
    if (t > 60.0) M = static_cast<int>(t);
    const int K = 15;

    Cpx sum = 0.0;
    for (int n = 1; n < M; ++n) sum += std::pow(Cpx(n, 0.0), -s);
    Cpx Md(static_cast<double>(M), 0.0);
    sum += 0.5 * std::pow(Md, -s);
    sum += std::pow(Md, 1.0 - s) / (s - 1.0);
    // Euler-Maclaurin corrections: B_{2k}/(2k)! * s(s+1)...(s+2k-2) * M^{-s-2k+1}
    Cpx poch = s;  // running product s(s+1)...(s+2k-2)
    double fact = 2.0;  // (2k)! starting at k=1
    for (int k = 1; k <= K; ++k) {
        sum += kBernoulli[k - 1] / fact * poch * std::pow(Md, -s - Cpx(2.0 * k - 1.0, 0.0));
        // extend pochhammer by (s+2k-1)(s+2k) and factorial to (2k+2)!
        poch *= (s + Cpx(2.0 * k - 1.0, 0.0)) * (s + Cpx(2.0 * k, 0.0));
        fact *= (2.0 * k + 1.0) * (2.0 * k + 2.0);
    }
    return sum;
}

namespace {
// Lanczos g = 7, n = 9 coefficients
const double kLanczos[] = {0.99999999999980993,  676.5203681218851,
                           -1259.1392167224028,  771.32342877765313,
                           -176.61502916214059,  12.507343278686905,
                           -0.13857109526572012, 9.9843695780195716e-6,
                           1.5056327351493116e-7};
}

Cpx gamma_fn(Cpx s) {
    if (s.real() < 0.5) {
        // reflection: Gamma(s) = pi / (sin(pi s) Gamma(1-s))
        return kPi / (std::sin(kPi * s) * gamma_fn(1.0 - s));
    }
    Cpx z = s - 1.0;
    Cpx x = kLanczos[0];
    for (int i = 1; i < 9; ++i) x += kLanczos[i] / (z + Cpx(i, 0.0));
    Cpx t = z + 7.5;
    return std::sqrt(2.0 * kPi) * std::pow(t, z + 0.5) * std::exp(-t) * x;
}

Cpx log_gamma(Cpx s) {
    if (s.real() < 0.5) {
        return std::log(kPi) - std::log(std::sin(kPi * s)) - log_gamma(1.0 - s);
    }
    Cpx z = s - 1.0;
    Cpx x = kLanczos[0];
    for (int i = 1; i < 9; ++i) x += kLanczos[i] / (z + Cpx(i, 0.0));
    Cpx t = z + 7.5;
    return 0.5 * std::log(2.0 * kPi) + (z + 0.5) * std::log(t) - t + std::log(x);
}

Cpx completed_xi(Cpx s) {
    if (std::abs(s) < 1e-6 || std::abs(s - Cpx(1.0, 0.0)) < 1e-6)
        throw std::invalid_argument("completed_xi: s too close to a pole of xi");
    // pi^{-s/2} Gamma(s/2) zeta(s), computed through logs to survive the
    // exponential decay of Gamma on vertical lines.
    Cpx lg = log_gamma(0.5 * s);
    Cpx lp = -0.5 * s * std::log(kPi);
    return std::exp(lg + lp) * zeta(s);
}

Cpx scattering_phi(Cpx s) {
    return completed_xi(2.0 * s - 1.0) / completed_xi(2.0 * s);
}

namespace {

// Plain double trapezoid; valid when the oscillatory cancellation stays
// within double precision.
Cpx bessel_k_double(Cpx nu, double x) {
    const double re = std::abs(nu.real());
    const double im = std::abs(nu.imag());
    double umax = 1.0;
    for (int it = 0; it < 64; ++it) {
        double need = (45.0 + re * umax + x) / x;  // cosh(umax) target
        double next = std::acosh(std::max(need, 1.5));
        if (std::abs(next - umax) < 1e-9) { umax = next; break; }
        umax = next;
    }
    double step = std::min(0.1, 0.5 / (1.0 + im));
    auto integrand = [&](double u) -> Cpx {
        double c = std::cosh(u);
        if (x * c - re * u > 745.0) return Cpx(0.0, 0.0);
        return std::exp(-x * c) * std::cosh(nu * u);
    };
    auto eval = [&](double hstep) -> Cpx {
        Cpx sum = 0.5 * integrand(0.0);
        double peak = std::abs(sum);
        for (int k = 1;; ++k) {
            double u = k * hstep;
            if (u > umax) break;
            Cpx v = integrand(u);
            double av = std::abs(v);
            peak = std::max(peak, av);
            if (av < 1e-18 * peak && u > 1.0) break;
            sum += v;
        }
        return sum * hstep;
    };
    Cpx prev = eval(step);
    for (int level = 0; level < 10; ++level) {
        step *= 0.5;
        Cpx cur = eval(step);
        if (std::abs(cur - prev) <= 1e-13 * (std::abs(cur) + 1e-300)) return cur;
        prev = cur;
    }
    return prev;
}

// Digits cancelled by the oscillatory integrand: the value scales like
// exp(-pi |Im nu| / 2) while the integrand is O(exp(-x)).
double bessel_cancel_digits(Cpx nu, double x) {
    double loss = 1.5707963267948966 * std::abs(nu.imag()) - x;
    return std::max(0.0, loss / 2.302585092994046);
}

}  // namespace

Cpx bessel_k(Cpx nu, double x) {
    if (!(x > 0.0)) throw std::invalid_argument("bessel_k: x must be positive");
    if (std::abs(nu.real()) >= 30.0)
        throw std::invalid_argument("bessel_k: |Re nu| < 30 required");
    if (x < 1e-3 && std::abs(nu.imag()) > 5.0)
        throw BudgetError("bessel_k: x too small for large |Im nu|");
    double digits = bessel_cancel_digits(nu, x);
    if (digits < 3.0) return bessel_k_double(nu, x);
    return bessel_k_mp(nu, x, digits + 14.0);
}

BesselKRay::BesselKRay(Cpx nu, double x_min, double x_max) : nu_(nu) {
    if (!(x_min > 0.0) || !(x_max > x_min))
        throw std::invalid_argument("BesselKRay: need 0 < x_min < x_max");
    x_min_ = x_min;
    x_max_ = x_max;
    const double T = std::abs(nu.imag());
    if (bessel_cancel_digits(nu, x_min) < 3.0) {
        direct_ = true;  // whole ray is fine in plain double
        return;
    }
    direct_ = false;
    // seed above the ray, then sweep downward; backward integration damps the
    // exponentially growing companion solution when x > T.
    double x_hi = std::max(x_max + 5.0, 1.05 * T + 10.0);
    Cpx w0 = bessel_k(nu_, x_hi);
    Cpx wp0 = -0.5 * (bessel_k(nu_ - 1.0, x_hi) + bessel_k(nu_ + 1.0, x_hi));

    const Cpx nu2 = nu_ * nu_;
    auto rhs = [&](double x, Cpx w, Cpx v, Cpx& dw, Cpx& dv) {
        dw = v;
        dv = -v / x + (1.0 + nu2 / (x * x)) * w;
    };
    double x = x_hi;
    Cpx w = w0, v = wp0;
    xs_.push_back(x);
    w_.push_back(w);
    wp_.push_back(v);
    while (x > x_min) {
        double om = 1.0;
        double disc = T * T / (x * x) - 1.0;
        if (disc > 0.0) om = std::max(1.0, std::sqrt(disc));
        double step = std::min(0.02, 0.02 / om);
        step = std::min(step, x - x_min + 1e-12);
        double hs = -step;
        Cpx k1w, k1v, k2w, k2v, k3w, k3v, k4w, k4v;
        rhs(x, w, v, k1w, k1v);
        rhs(x + 0.5 * hs, w + 0.5 * hs * k1w, v + 0.5 * hs * k1v, k2w, k2v);
        rhs(x + 0.5 * hs, w + 0.5 * hs * k2w, v + 0.5 * hs * k2v, k3w, k3v);
        rhs(x + hs, w + hs * k3w, v + hs * k3v, k4w, k4v);
        w += hs / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
        v += hs / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        x += hs;
        xs_.push_back(x);
        w_.push_back(w);
        wp_.push_back(v);
    }
    // reverse into ascending order for lookup
    std::reverse(xs_.begin(), xs_.end());
    std::reverse(w_.begin(), w_.end());
    std::reverse(wp_.begin(), wp_.end());
}

Cpx BesselKRay::eval(double x) const {
    if (direct_) return bessel_k(nu_, x);
    if (x < xs_.front() - 1e-9 || x > xs_.back() + 1e-9)
        throw std::invalid_argument("BesselKRay: x outside tabulated ray");
    auto it = std::lower_bound(xs_.begin(), xs_.end(), x);
    size_t i1 = std::min<size_t>(std::distance(xs_.begin(), it), xs_.size() - 1);
    size_t i0 = (i1 == 0) ? 0 : i1 - 1;
    if (i0 == i1) return w_[i0];
    double a = xs_[i0], b = xs_[i1], L = b - a;
    double t = (x - a) / L;
    // cubic Hermite with stored derivatives
    double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
    double h10 = t * (1 - t) * (1 - t);
    double h01 = t * t * (3 - 2 * t);
    double h11 = t * t * (t - 1);
    return h00 * w_[i0] + h10 * L * wp_[i0] + h01 * w_[i1] + h11 * L * wp_[i1];
}

}  // namespace cuspml
