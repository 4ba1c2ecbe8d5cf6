#pragma once

#include <complex>
#include <vector>

namespace cuspml {

using Cpx = std::complex<double>;

// Riemann zeta by Euler-Maclaurin.  The default budget is 30 direct terms and
// 15 tail corrections; the direct-term count grows with |Im s| so the tail
// stays asymptotic at large height.
Cpx zeta(Cpx s);

// Gamma via the Lanczos approximation (g = 7, 15 coefficients), reflection
// formula for Re s < 1/2.
Cpx gamma_fn(Cpx s);
Cpx log_gamma(Cpx s);

// Completed zeta xi(s) = pi^{-s/2} Gamma(s/2) zeta(s), symmetric under
// s -> 1-s.  Rejects s within 1e-6 of the poles s = 0, 1.
Cpx completed_xi(Cpx s);

// Scattering coefficient of the modular surface, phi(s) = xi(2s-1)/xi(2s).
Cpx scattering_phi(Cpx s);

// Modified Bessel K_nu(x) = int_0^infty exp(-x cosh u) cosh(nu u) du for
// complex order, x > 0, |Re nu| < 30.  Trapezoidal rule on the doubly-
// exponentially decaying integrand, refined until convergence; nodes beyond
// 1e-18 of the running maximum are dropped.  In the oscillatory regime
// x << |Im nu| the integral cancels down to ~exp(-pi |Im nu| / 2), so the
// evaluation switches to MPFR with enough guard digits to keep ~1e-10
// relative accuracy for x >= 0.1.
Cpx bessel_k(Cpx nu, double x);

// K_nu on a whole ray [x_min, x_max] for one fixed order: seeds from the
// high-precision integral at the top of the ray, then integrates the modified
// Bessel equation backward (stable direction) and stores a Hermite table.
// Meant for bulk evaluation at large |Im nu| (Fourier modes of Eisenstein
// series); accuracy ~1e-5 relative there.
class BesselKRay {
  public:
    BesselKRay(Cpx nu, double x_min, double x_max);
    Cpx eval(double x) const;

  private:
    Cpx nu_;
    bool direct_ = true;  // small |Im nu|: call bessel_k per query
    double x_min_ = 0.0, x_max_ = 0.0;
    std::vector<double> xs_;          // descending storage converted to ascending
    std::vector<Cpx> w_, wp_;         // values and derivatives
};

}  // namespace cuspml
