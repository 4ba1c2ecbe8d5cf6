#include "cuspml/symbol.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace cuspml {

namespace {

PhasePoint shifted(const PhasePoint& p, int c, double delta) {
    PhasePoint q = p;
    const int d = p.dim();
    if (c == 0) q.y += delta;
    else if (c <= d) q.theta[c - 1] += delta;
    else if (c == d + 1) q.Y += delta;
    else q.J[c - d - 2] += delta;
    return q;
}

double coord_value(const PhasePoint& p, int c) {
    const int d = p.dim();
    if (c == 0) return p.y;
    if (c <= d) return p.theta[c - 1];
    if (c == d + 1) return p.Y;
    return p.J[c - d - 2];
}

}  // namespace

bool Symbol::in_support(const PhasePoint& p) const {
    if (support.has_y && (p.y < support.y_lo || p.y > support.y_hi)) return false;
    if (support.has_energy && hamiltonian(p) > support.energy) return false;
    return true;
}

Cpx Symbol::operator()(double h, const PhasePoint& p) const {
    if (!in_support(p)) return Cpx(0.0, 0.0);
    return eval_fn(h, p);
}

Cpx Symbol::partial(double h, const PhasePoint& p, int c) const {
    if (d1_fn) {
        if (!in_support(p)) return Cpx(0.0, 0.0);
        return d1_fn(h, p, c);
    }
    const double step = 1e-5 * (1.0 + std::abs(coord_value(p, c)));
    auto central = [&](double s) {
        return ((*this)(h, shifted(p, c, s)) - (*this)(h, shifted(p, c, -s))) / (2.0 * s);
    };
    Cpx d_full = central(step);
    Cpx d_half = central(0.5 * step);
    return (4.0 * d_half - d_full) / 3.0;
}

Cpx Symbol::partial2(double h, const PhasePoint& p, int c1, int c2) const {
    if (d2_fn) {
        if (!in_support(p)) return Cpx(0.0, 0.0);
        return d2_fn(h, p, c1, c2);
    }
    if (d1_fn) {
        const double step = 1e-5 * (1.0 + std::abs(coord_value(p, c1)));
        auto central = [&](double s) {
            PhasePoint pp = shifted(p, c1, s), pm = shifted(p, c1, -s);
            Cpx vp = in_support(pp) ? d1_fn(h, pp, c2) : Cpx(0, 0);
            Cpx vm = in_support(pm) ? d1_fn(h, pm, c2) : Cpx(0, 0);
            return (vp - vm) / (2.0 * s);
        };
        Cpx d_full = central(step);
        Cpx d_half = central(0.5 * step);
        return (4.0 * d_half - d_full) / 3.0;
    }
    const double s1 = 3e-4 * (1.0 + std::abs(coord_value(p, c1)));
    const double s2 = 3e-4 * (1.0 + std::abs(coord_value(p, c2)));
    if (c1 == c2) {
        return ((*this)(h, shifted(p, c1, s1)) - 2.0 * (*this)(h, p) +
                (*this)(h, shifted(p, c1, -s1))) / (s1 * s1);
    }
    Cpx v = (*this)(h, shifted(shifted(p, c1, s1), c2, s2)) -
            (*this)(h, shifted(shifted(p, c1, s1), c2, -s2)) -
            (*this)(h, shifted(shifted(p, c1, -s1), c2, s2)) +
            (*this)(h, shifted(shifted(p, c1, -s1), c2, -s2));
    return v / (4.0 * s1 * s2);
}

Symbol symbol_zero(int d) { return symbol_const(d, Cpx(0.0, 0.0)); }

Symbol symbol_const(int d, Cpx c) {
    Symbol s;
    s.d = d;
    s.order = 0.0;
    s.eval_fn = [c](double, const PhasePoint&) { return c; };
    s.d1_fn = [](double, const PhasePoint&, int) { return Cpx(0.0, 0.0); };
    s.d2_fn = [](double, const PhasePoint&, int, int) { return Cpx(0.0, 0.0); };
    return s;
}

Symbol symbol_add(const Symbol& a, const Symbol& b, Cpx ca, Cpx cb) {
    Symbol s;
    s.d = a.d;
    s.order = std::max(a.order, b.order);
    s.rho = std::max(a.rho, b.rho);
    auto A = std::make_shared<Symbol>(a);
    auto B = std::make_shared<Symbol>(b);
    s.eval_fn = [A, B, ca, cb](double h, const PhasePoint& p) {
        return ca * (*A)(h, p) + cb * (*B)(h, p);
    };
    if (a.d1_fn && b.d1_fn)
        s.d1_fn = [A, B, ca, cb](double h, const PhasePoint& p, int c) {
            return ca * A->partial(h, p, c) + cb * B->partial(h, p, c);
        };
    if (a.d2_fn && b.d2_fn)
        s.d2_fn = [A, B, ca, cb](double h, const PhasePoint& p, int c1, int c2) {
            return ca * A->partial2(h, p, c1, c2) + cb * B->partial2(h, p, c1, c2);
        };
    // support hull
    if (a.support.has_y && b.support.has_y) {
        s.support.has_y = true;
        s.support.y_lo = std::min(a.support.y_lo, b.support.y_lo);
        s.support.y_hi = std::max(a.support.y_hi, b.support.y_hi);
    }
    if (a.support.has_energy && b.support.has_energy) {
        s.support.has_energy = true;
        s.support.energy = std::max(a.support.energy, b.support.energy);
    }
    s.support.theta_modes = std::max(a.support.theta_modes, b.support.theta_modes);
    s.support.xi_feature = combine_features(a.support.xi_feature, b.support.xi_feature);
    return s;
}

Symbol symbol_mul(const Symbol& a, const Symbol& b) {
    Symbol s;
    s.d = a.d;
    s.order = a.order + b.order;
    s.rho = std::max(a.rho, b.rho);
    auto A = std::make_shared<Symbol>(a);
    auto B = std::make_shared<Symbol>(b);
    s.eval_fn = [A, B](double h, const PhasePoint& p) { return (*A)(h, p) * (*B)(h, p); };
    if (a.d1_fn && b.d1_fn)
        s.d1_fn = [A, B](double h, const PhasePoint& p, int c) {
            return A->partial(h, p, c) * (*B)(h, p) + (*A)(h, p) * B->partial(h, p, c);
        };
    if (a.d2_fn && b.d2_fn)
        s.d2_fn = [A, B](double h, const PhasePoint& p, int c1, int c2) {
            return A->partial2(h, p, c1, c2) * (*B)(h, p) +
                   A->partial(h, p, c1) * B->partial(h, p, c2) +
                   A->partial(h, p, c2) * B->partial(h, p, c1) +
                   (*A)(h, p) * B->partial2(h, p, c1, c2);
        };
    // support: intersection
    if (a.support.has_y || b.support.has_y) {
        s.support.has_y = true;
        s.support.y_lo = a.support.has_y ? a.support.y_lo : b.support.y_lo;
        s.support.y_hi = a.support.has_y ? a.support.y_hi : b.support.y_hi;
        if (a.support.has_y && b.support.has_y) {
            s.support.y_lo = std::max(a.support.y_lo, b.support.y_lo);
            s.support.y_hi = std::min(a.support.y_hi, b.support.y_hi);
        }
    }
    if (a.support.has_energy || b.support.has_energy) {
        s.support.has_energy = true;
        if (a.support.has_energy && b.support.has_energy)
            s.support.energy = std::min(a.support.energy, b.support.energy);
        else
            s.support.energy = a.support.has_energy ? a.support.energy : b.support.energy;
    }
    s.support.theta_modes = a.support.theta_modes + b.support.theta_modes;
    s.support.xi_feature = combine_features(a.support.xi_feature, b.support.xi_feature);
    return s;
}

Symbol symbol_scale(const Symbol& a, Cpx c) {
    return symbol_add(a, symbol_zero(a.d), c, 0.0);
}

Symbol symbol_conj(const Symbol& a) {
    Symbol s = a;
    auto A = std::make_shared<Symbol>(a);
    s.eval_fn = [A](double h, const PhasePoint& p) { return std::conj((*A)(h, p)); };
    if (a.d1_fn)
        s.d1_fn = [A](double h, const PhasePoint& p, int c) {
            return std::conj(A->partial(h, p, c));
        };
    if (a.d2_fn)
        s.d2_fn = [A](double h, const PhasePoint& p, int c1, int c2) {
            return std::conj(A->partial2(h, p, c1, c2));
        };
    return s;
}

Symbol apply_field(const Symbol& s, int field) {
    const int d = s.d;
    if (field < 0 || field >= coord_count(d))
        throw std::out_of_range("apply_field: bad frame index");
    Symbol r;
    r.d = d;
    r.rho = s.rho;
    r.support = s.support;
    const bool xi_dir = field >= d + 1;
    r.order = xi_dir ? s.order - 1.0 : s.order;
    auto S = std::make_shared<Symbol>(s);
    if (xi_dir) {
        r.eval_fn = [S, field](double h, const PhasePoint& p) {
            return S->partial(h, p, field) / p.y;
        };
    } else {
        r.eval_fn = [S, field](double h, const PhasePoint& p) {
            return p.y * S->partial(h, p, field);
        };
    }
    if (s.d2_fn) {
        // one analytic layer is available for the first derivative of X sigma
        if (xi_dir) {
            r.d1_fn = [S, field](double h, const PhasePoint& p, int c) {
                Cpx v = S->partial2(h, p, field, c) / p.y;
                if (c == 0) v -= S->partial(h, p, field) / (p.y * p.y);
                return v;
            };
        } else {
            r.d1_fn = [S, field](double h, const PhasePoint& p, int c) {
                Cpx v = p.y * S->partial2(h, p, field, c);
                if (c == 0) v += S->partial(h, p, field);
                return v;
            };
        }
    }
    return r;
}

Symbol apply_field_word(const Symbol& s, const std::vector<int>& word) {
    Symbol r = s;
    for (auto it = word.rbegin(); it != word.rend(); ++it) r = apply_field(r, *it);
    return r;
}

double seminorm(const Symbol& s, double n, const std::vector<int>& alpha,
                const std::vector<PhasePoint>& grid, double h) {
    if (grid.empty()) throw std::invalid_argument("seminorm: empty grid");
    Symbol der = apply_field_word(s, alpha);
    int xi_count = 0;
    for (int a : alpha)
        if (a >= s.d + 1) ++xi_count;
    double best = 0.0;
    for (const auto& p : grid) {
        double w = p.y * std::sqrt(p.Y * p.Y + p.J.squaredNorm());
        double weight = std::pow(std::sqrt(1.0 + w * w), n - xi_count);
        best = std::max(best, std::abs(der(h, p)) / weight);
    }
    if (s.rho > 0.0) best *= std::pow(h, s.rho * static_cast<double>(alpha.size()));
    return best;
}

std::vector<PhasePoint> seminorm_grid(const Symbol& s, const CuspChart& chart,
                                      int n_y, int n_theta, int n_xi, double xi_max) {
    double y_lo = s.support.has_y ? s.support.y_lo : chart.a;
    double y_hi = s.support.has_y ? s.support.y_hi : 10.0 * chart.a;
    y_lo = std::max(y_lo, 1e-6);
    std::vector<PhasePoint> grid;
    grid.reserve(static_cast<size_t>(n_y) * n_theta * n_xi * n_xi);
    for (int iy = 0; iy < n_y; ++iy) {
        double u = std::log(y_lo) +
                   (std::log(y_hi) - std::log(y_lo)) * (iy + 0.5) / n_y;
        double y = std::exp(u);
        for (int it = 0; it < n_theta; ++it) {
            double th = (it + 0.5) / n_theta;
            for (int iY = 0; iY < n_xi; ++iY) {
                double yY = -xi_max + 2.0 * xi_max * (iY + 0.5) / n_xi;
                for (int iJ = 0; iJ < n_xi; ++iJ) {
                    double yJ = -xi_max + 2.0 * xi_max * (iJ + 0.5) / n_xi;
                    grid.push_back(PhasePoint::d1(y, th, yY / y, yJ / y));
                }
            }
        }
    }
    return grid;
}

Symbol poisson(const Symbol& a, const Symbol& b) {
    Symbol s;
    s.d = a.d;
    s.order = a.order + b.order - 1.0;
    s.rho = std::max(a.rho, b.rho);
    auto A = std::make_shared<Symbol>(a);
    auto B = std::make_shared<Symbol>(b);
    const int d = a.d;
    s.eval_fn = [A, B, d](double h, const PhasePoint& p) {
        Cpx v = A->partial(h, p, d + 1) * B->partial(h, p, 0) -
                A->partial(h, p, 0) * B->partial(h, p, d + 1);
        for (int i = 0; i < d; ++i) {
            v += A->partial(h, p, d + 2 + i) * B->partial(h, p, 1 + i) -
                 A->partial(h, p, 1 + i) * B->partial(h, p, d + 2 + i);
        }
        return v;
    };
    if (a.d2_fn && b.d2_fn) {
        s.d1_fn = [A, B, d](double h, const PhasePoint& p, int c) {
            auto term = [&](int u, int v) {
                return A->partial2(h, p, u, c) * B->partial(h, p, v) +
                       A->partial(h, p, u) * B->partial2(h, p, v, c);
            };
            Cpx r = term(d + 1, 0) - term(0, d + 1);
            for (int i = 0; i < d; ++i) r += term(d + 2 + i, 1 + i) - term(1 + i, d + 2 + i);
            return r;
        };
    }
    // support: intersection along the product rule
    Symbol prod = symbol_mul(a, b);
    s.support = prod.support;
    return s;
}

// --- differential operators --------------------------------------------------

DiffOp diffop_compose(const DiffOp& A, const DiffOp& B) {
    DiffOp R;
    R.d = A.d;
    for (const auto& ta : A.terms) {
        for (const auto& tb : B.terms) {
            // expand X_{word_a} (coeff_b X_{word_b}) by Leibniz, processing the
            // letters of word_a right to left
            struct Partial {
                Symbol coeff;
                std::vector<int> word;
            };
            std::vector<Partial> acc{{tb.coeff, tb.word}};
            for (auto it = ta.word.rbegin(); it != ta.word.rend(); ++it) {
                int letter = *it;
                std::vector<Partial> next;
                for (auto& pr : acc) {
                    next.push_back({apply_field(pr.coeff, letter), pr.word});
                    std::vector<int> w;
                    w.push_back(letter);
                    w.insert(w.end(), pr.word.begin(), pr.word.end());
                    next.push_back({pr.coeff, std::move(w)});
                }
                acc = std::move(next);
            }
            const int total_h = static_cast<int>(ta.word.size() + tb.word.size()) +
                                ta.i + tb.i;
            for (auto& pr : acc) {
                DiffOpTerm t;
                t.word = pr.word;
                t.i = total_h - static_cast<int>(pr.word.size());
                t.coeff = symbol_mul(ta.coeff, pr.coeff);
                R.terms.push_back(std::move(t));
            }
        }
    }
    return R;
}

Symbol principal_symbol(const DiffOp& D) {
    Symbol s;
    s.d = D.d;
    double deg = 0.0;
    auto terms = std::make_shared<std::vector<DiffOpTerm>>();
    for (const auto& t : D.terms) {
        if (t.i == 0) {
            terms->push_back(t);
            deg = std::max(deg, static_cast<double>(t.word.size()));
        }
    }
    s.order = deg;
    const int d = D.d;
    s.eval_fn = [terms, d](double h, const PhasePoint& p) {
        Cpx total(0.0, 0.0);
        for (const auto& t : *terms) {
            Cpx v = t.coeff(h, p);
            for (int w : t.word) {
                double xi = (w == 0) ? p.Y : p.J[w - 1];
                v *= Cpx(0.0, 1.0) * p.y * xi;
            }
            total += v;
        }
        return total;
    };
    return s;
}

// --- smooth profiles ----------------------------------------------------------

void smoothstep_c2(double t, double out[3]) {
    if (t <= 0.0) { out[0] = out[1] = out[2] = 0.0; return; }
    if (t >= 1.0) { out[0] = 1.0; out[1] = out[2] = 0.0; return; }
    const double u = 1.0 - t;
    const double A = std::exp(-1.0 / t), B = std::exp(-1.0 / u);
    const double A1 = A / (t * t);
    const double B1 = -B / (u * u);
    const double A2 = A * (1.0 / (t * t * t * t) - 2.0 / (t * t * t));
    const double B2 = B * (1.0 / (u * u * u * u) - 2.0 / (u * u * u));
    const double D = A + B, D1 = A1 + B1;
    const double N = A1 * B - A * B1;
    const double N1 = A2 * B - A * B2;
    out[0] = A / D;
    out[1] = N / (D * D);
    out[2] = N1 / (D * D) - 2.0 * N * D1 / (D * D * D);
}

namespace {

// phase functions with gradients/Hessians in raw coordinates
struct Phase {
    int kind;  // 0 ln y, 1 theta_i, 2 yY, 3 yJ_i, 4 p
    int idx = 0;

    double value(const PhasePoint& p) const {
        switch (kind) {
            case 0: return std::log(p.y);
            case 1: return p.theta[idx];
            case 2: return p.y * p.Y;
            case 3: return p.y * p.J[idx];
            default: return hamiltonian(p);
        }
    }
    double grad(const PhasePoint& p, int c) const {
        const int d = p.dim();
        switch (kind) {
            case 0: return c == 0 ? 1.0 / p.y : 0.0;
            case 1: return c == 1 + idx ? 1.0 : 0.0;
            case 2:
                if (c == 0) return p.Y;
                if (c == d + 1) return p.y;
                return 0.0;
            case 3:
                if (c == 0) return p.J[idx];
                if (c == d + 2 + idx) return p.y;
                return 0.0;
            default:
                if (c == 0) return p.y * (p.Y * p.Y + p.J.squaredNorm());
                if (c == d + 1) return p.y * p.y * p.Y;
                if (c >= d + 2) return p.y * p.y * p.J[c - d - 2];
                return 0.0;
        }
    }
    double hess(const PhasePoint& p, int c1, int c2) const {
        const int d = p.dim();
        if (c1 > c2) std::swap(c1, c2);
        switch (kind) {
            case 0: return (c1 == 0 && c2 == 0) ? -1.0 / (p.y * p.y) : 0.0;
            case 1: return 0.0;
            case 2: return (c1 == 0 && c2 == d + 1) ? 1.0 : 0.0;
            case 3: return (c1 == 0 && c2 == d + 2 + idx) ? 1.0 : 0.0;
            default:
                if (c1 == 0 && c2 == 0) return p.Y * p.Y + p.J.squaredNorm();
                if (c1 == 0 && c2 == d + 1) return 2.0 * p.y * p.Y;
                if (c1 == 0 && c2 >= d + 2) return 2.0 * p.y * p.J[c2 - d - 2];
                if (c1 == d + 1 && c2 == d + 1) return p.y * p.y;
                if (c1 >= d + 2 && c1 == c2) return p.y * p.y;
                return 0.0;
        }
    }
};

using Profile = std::function<void(double, double*)>;

Profile profile_gauss(double c, double w) {
    return [c, w](double v, double* out) {
        double u = (v - c) / w;
        double g = std::exp(-u * u);
        out[0] = g;
        out[1] = -2.0 * u / w * g;
        out[2] = (4.0 * u * u - 2.0) / (w * w) * g;
    };
}

Profile profile_plateau(double lo, double hi, double L) {
    return [lo, hi, L](double v, double* out) {
        double s1[3], s2[3];
        smoothstep_c2((v - lo) / L, s1);
        smoothstep_c2((hi - v) / L, s2);
        out[0] = s1[0] * s2[0];
        out[1] = s1[1] / L * s2[0] - s1[0] * s2[1] / L;
        out[2] = s1[2] / (L * L) * s2[0] - 2.0 * s1[1] * s2[1] / (L * L) +
                 s1[0] * s2[2] / (L * L);
    };
}

// chi-tilde(v - s0): 1 for v <= s0 + ln 4, 0 for v >= s0 + ln 5
Profile profile_cutoff(double s0) {
    const double lo = s0 + std::log(4.0), hi = s0 + std::log(5.0);
    const double L = hi - lo;
    return [lo, L](double v, double* out) {
        double st[3];
        smoothstep_c2((v - lo) / L, st);
        out[0] = 1.0 - st[0];
        out[1] = -st[1] / L;
        out[2] = -st[2] / (L * L);
    };
}

Profile profile_cos(double beta, int k) {
    const double om = 2.0 * 3.14159265358979323846 * k;
    return [beta, om](double v, double* out) {
        out[0] = 1.0 + beta * std::cos(om * v);
        out[1] = -beta * om * std::sin(om * v);
        out[2] = -beta * om * om * std::cos(om * v);
    };
}

struct FactorList {
    std::vector<Phase> phases;
    std::vector<Profile> profiles;
};

Symbol product_symbol(int d, FactorList fl, SupportHint hint, double order) {
    auto data = std::make_shared<FactorList>(std::move(fl));
    const int n = static_cast<int>(data->phases.size());
    Symbol s;
    s.d = d;
    s.order = order;
    s.support = hint;

    auto eval_factors = [data, n](const PhasePoint& p, double vals[][3]) {
        for (int m = 0; m < n; ++m)
            data->profiles[m](data->phases[m].value(p), vals[m]);
    };

    s.eval_fn = [data, n, eval_factors](double, const PhasePoint& p) -> Cpx {
        double vals[8][3];
        eval_factors(p, vals);
        double prod = 1.0;
        for (int m = 0; m < n; ++m) prod *= vals[m][0];
        return Cpx(prod, 0.0);
    };
    s.d1_fn = [data, n, eval_factors](double, const PhasePoint& p, int c) -> Cpx {
        double vals[8][3];
        eval_factors(p, vals);
        double total = 0.0;
        for (int m = 0; m < n; ++m) {
            double g = data->phases[m].grad(p, c);
            if (g == 0.0) continue;
            double term = vals[m][1] * g;
            for (int k = 0; k < n; ++k)
                if (k != m) term *= vals[k][0];
            total += term;
        }
        return Cpx(total, 0.0);
    };
    s.d2_fn = [data, n, eval_factors](double, const PhasePoint& p, int c1, int c2) -> Cpx {
        double vals[8][3];
        eval_factors(p, vals);
        double total = 0.0;
        for (int m = 0; m < n; ++m) {
            double ga = data->phases[m].grad(p, c1);
            double gb = data->phases[m].grad(p, c2);
            double hab = data->phases[m].hess(p, c1, c2);
            double term = vals[m][2] * ga * gb + vals[m][1] * hab;
            if (term != 0.0) {
                for (int k = 0; k < n; ++k)
                    if (k != m) term *= vals[k][0];
                total += term;
            }
            if (ga == 0.0) continue;
            for (int l = 0; l < n; ++l) {
                if (l == m) continue;
                double gl = data->phases[l].grad(p, c2);
                if (gl == 0.0) continue;
                double cross = vals[m][1] * ga * vals[l][1] * gl;
                for (int k = 0; k < n; ++k)
                    if (k != m && k != l) cross *= vals[k][0];
                total += cross;
            }
        }
        return Cpx(total, 0.0);
    };
    return s;
}

const double kTail = 5.5;  // Gaussian truncation in widths; exp(-5.5^2) ~ 7e-14

}  // namespace

Symbol make_cusp_cutoff(double s, const CuspChart& chart) {
    if (s < 0.0) throw std::invalid_argument("make_cusp_cutoff: s must be >= 0");
    FactorList fl;
    fl.phases.push_back(Phase{0, 0});
    fl.profiles.push_back(profile_cutoff(s + std::log(chart.a)));
    SupportHint hint;
    hint.has_y = true;
    hint.y_lo = 0.0;
    hint.y_hi = chart.a * std::exp(s + std::log(5.0));
    return product_symbol(chart.d, std::move(fl), hint, 0.0);
}

Symbol make_base_cutoff(const CuspChart& chart) {
    FactorList fl;
    fl.phases.push_back(Phase{0, 0});
    const double lo = std::log(2.0 * chart.a), hi = std::log(3.0 * chart.a);
    const double L = hi - lo;
    fl.profiles.push_back([lo, L](double v, double* out) {
        double st[3];
        smoothstep_c2((v - lo) / L, st);
        out[0] = st[0];
        out[1] = st[1] / L;
        out[2] = st[2] / (L * L);
    });
    SupportHint hint;
    hint.has_y = true;
    hint.y_lo = 2.0 * chart.a;
    hint.y_hi = 1e30;
    return product_symbol(chart.d, std::move(fl), hint, 0.0);
}

Symbol make_y_window(double y_lo, double y_hi, double L, int d) {
    FactorList fl;
    fl.phases.push_back(Phase{0, 0});
    fl.profiles.push_back(profile_plateau(std::log(y_lo), std::log(y_hi), L));
    SupportHint hint;
    hint.has_y = true;
    hint.y_lo = y_lo;
    hint.y_hi = y_hi;
    return product_symbol(d, std::move(fl), hint, 0.0);
}

Symbol make_bump(const BumpParams& p, int d) {
    FactorList fl;
    fl.phases.push_back(Phase{0, 0});
    fl.profiles.push_back(profile_plateau(std::log(p.y_lo), std::log(p.y_hi), p.edge));
    if (p.theta_beta != 0.0) {
        fl.phases.push_back(Phase{1, 0});
        fl.profiles.push_back(profile_cos(p.theta_beta, p.theta_mode));
    }
    fl.phases.push_back(Phase{2, 0});
    fl.profiles.push_back(profile_gauss(p.cY, p.wY));
    fl.phases.push_back(Phase{3, 0});
    fl.profiles.push_back(profile_gauss(p.cJ, p.wJ));

    SupportHint hint;
    hint.has_y = true;
    hint.y_lo = p.y_lo;
    hint.y_hi = p.y_hi;
    hint.has_energy = true;
    double my = std::abs(p.cY) + kTail * p.wY;
    double mj = std::abs(p.cJ) + kTail * p.wJ;
    hint.energy = 0.5 * (my * my + mj * mj);
    hint.theta_modes = (p.theta_beta != 0.0) ? p.theta_mode : 0;
    hint.xi_feature = std::min(p.wY, p.wJ);
    Symbol s = product_symbol(d, std::move(fl), hint, 0.0);

    // factored form: the y Y profile splits off, the rest depends on (y, theta, J)
    auto sep = std::make_shared<SeparableXi>();
    BumpParams cp = p;
    Profile wyprof = profile_plateau(std::log(cp.y_lo), std::log(cp.y_hi), cp.edge);
    Profile wqprof = profile_gauss(cp.cJ, cp.wJ);
    Profile gyprof = profile_gauss(cp.cY, cp.wY);
    sep->rest = [cp, wyprof, wqprof](double, double y, double theta, double J) -> Cpx {
        double wy[3], wq[3];
        wyprof(std::log(y), wy);
        wqprof(y * J, wq);
        double th = cp.theta_beta != 0.0
                        ? 1.0 + cp.theta_beta *
                                    std::cos(2.0 * 3.14159265358979323846 *
                                             cp.theta_mode * theta)
                        : 1.0;
        return Cpx(wy[0] * wq[0] * th, 0.0);
    };
    sep->gprof = [gyprof](double v) {
        double g[3];
        gyprof(v, g);
        return g[0];
    };
    sep->v_lo = cp.cY - kTail * cp.wY;
    sep->v_hi = cp.cY + kTail * cp.wY;
    s.separable = sep;
    return s;
}

Symbol make_gaussian_p(double p0, double wp, std::optional<BumpParams> window, int d) {
    FactorList fl;
    if (window) {
        fl.phases.push_back(Phase{0, 0});
        fl.profiles.push_back(
            profile_plateau(std::log(window->y_lo), std::log(window->y_hi), window->edge));
    }
    fl.phases.push_back(Phase{4, 0});
    fl.profiles.push_back(profile_gauss(p0, wp));

    SupportHint hint;
    if (window) {
        hint.has_y = true;
        hint.y_lo = window->y_lo;
        hint.y_hi = window->y_hi;
    }
    hint.has_energy = true;
    hint.energy = p0 + kTail * wp;
    hint.xi_feature = wp / std::sqrt(2.0 * (std::abs(p0) + wp) + 1e-12);
    return product_symbol(d, std::move(fl), hint, 0.0);
}

Symbol symbol_from_recipe(const nlohmann::json& r, const CuspChart& chart) {
    const std::string name = r.at("name").get<std::string>();
    if (name == "constant") {
        return symbol_const(chart.d, Cpx(r.value("value", 1.0), 0.0));
    }
    if (name == "cusp_cutoff") {
        return make_cusp_cutoff(r.value("s", 0.0), chart);
    }
    if (name == "bump") {
        BumpParams p;
        p.y_lo = r.value("y_lo", p.y_lo);
        p.y_hi = r.value("y_hi", p.y_hi);
        p.edge = r.value("edge", p.edge);
        p.theta_beta = r.value("theta_beta", p.theta_beta);
        p.theta_mode = r.value("theta_mode", p.theta_mode);
        p.cY = r.value("cY", p.cY);
        p.wY = r.value("wY", p.wY);
        p.cJ = r.value("cJ", p.cJ);
        p.wJ = r.value("wJ", p.wJ);
        return make_bump(p, chart.d);
    }
    if (name == "gaussian_p") {
        std::optional<BumpParams> w;
        if (r.contains("y_lo")) {
            BumpParams p;
            p.y_lo = r.at("y_lo").get<double>();
            p.y_hi = r.at("y_hi").get<double>();
            p.edge = r.value("edge", p.edge);
            w = p;
        }
        return make_gaussian_p(r.value("p0", 0.045), r.value("wp", 0.015), w, chart.d);
    }
    throw std::invalid_argument("symbol_from_recipe: unknown recipe name '" + name + "'");
}

}  // namespace cuspml
