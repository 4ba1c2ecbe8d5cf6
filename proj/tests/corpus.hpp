#pragma once

// Shared test symbols and grids.  The calculus pair keeps h / (edge * wY)
// comfortably below one over the tested h range so the expansions are inside
// their asymptotic regime; the trace/HS symbols sit low in the band with wide
// yJ profiles so several nonzero theta modes carry weight at the sampled
// frequencies 2 pi h m.

#include "cuspml/grid.hpp"
#include "cuspml/symbol.hpp"

namespace cuspml::testing {

inline Symbol calc_a() {
    BumpParams p;
    p.y_lo = 2.0;
    p.y_hi = 7.5;
    p.edge = 0.45;
    p.cY = 0.15;
    p.wY = 0.5;
    p.cJ = 0.0;
    p.wJ = 0.15;
    return make_bump(p);
}

inline Symbol calc_b() {
    BumpParams p;
    p.y_lo = 2.2;
    p.y_hi = 7.0;
    p.edge = 0.4;
    p.cY = -0.1;
    p.wY = 0.55;
    p.cJ = 0.05;
    p.wJ = 0.16;
    return make_bump(p);
}

inline double calc_xi_max() { return 0.15 + 5.5 * 0.55; }

inline GridSpec calc_grid(double h_min) {
    return GridSpec::tuned(1.0, 14.0, h_min, calc_xi_max(), 2);
}

// low band, wide yJ: nonzero theta-mode content at J = 2 pi h m
inline Symbol spectral_a() {
    BumpParams p;
    p.y_lo = 1.35;
    p.y_hi = 4.5;
    p.edge = 0.35;
    p.cY = 0.0;
    p.wY = 0.5;
    p.cJ = 0.0;
    p.wJ = 0.5;
    return make_bump(p);
}

inline double spectral_xi_max() { return 5.5 * 0.5; }

inline GridSpec spectral_grid(double h_min, int mode_max) {
    return GridSpec::tuned(1.0, 6.5, h_min, spectral_xi_max(), mode_max);
}

}  // namespace cuspml::testing
