#include "cuspml/quantize.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace cuspml {

namespace {

const double kTwoPi = 6.283185307179586476925287;

// Running maximum of |sigma| on its support, for relative thresholds.
double symbol_scale(const Symbol& s, double h, const GridSpec& g) {
    double lo = s.support.has_y ? std::max(s.support.y_lo, g.y_min) : g.y_min;
    double hi = s.support.has_y ? std::min(s.support.y_hi, g.y_max) : g.y_max;
    if (!(hi > lo)) return 0.0;
    double xi_cap = s.support.has_energy ? std::sqrt(2.0 * s.support.energy) : 4.0;
    double best = 0.0;
    for (int iy = 0; iy <= 12; ++iy) {
        double y = lo * std::pow(hi / lo, iy / 12.0);
        for (int it = 0; it < 4; ++it) {
            double th = it / 4.0;
            for (int iY = -6; iY <= 6; ++iY)
                for (int iJ = -6; iJ <= 6; ++iJ) {
                    PhasePoint p = PhasePoint::d1(y, th, xi_cap * iY / (6.0 * y),
                                                  xi_cap * iJ / (6.0 * y));
                    best = std::max(best, std::abs(s(h, p)));
                }
        }
    }
    return best;
}

// theta-mode coefficients sigma_mu(yhat, Y, J)
class ThetaModes {
  public:
    ThetaModes(const Symbol& s, double h, int mu_max, int samples)
        : s_(&s), h_(h), mu_max_(mu_max), ns_(samples) {
        theta_dep_ = s.support.theta_modes > 0;
        if (theta_dep_) {
            tw_.resize(ns_ * (2 * mu_max_ + 1));
            for (int q = 0; q < ns_; ++q)
                for (int c = 0; c <= 2 * mu_max_; ++c) {
                    int mu = c - mu_max_;
                    double ang = -kTwoPi * mu * q / ns_;
                    tw_[q * (2 * mu_max_ + 1) + c] = Cpx(std::cos(ang), std::sin(ang));
                }
        }
    }

    int mu_max() const { return mu_max_; }

    // coefficient of a single mode
    Cpx mode(int mu, double yhat, double Y, double J) const {
        if (!theta_dep_) {
            if (mu != 0) return Cpx(0.0, 0.0);
            return (*s_)(h_, PhasePoint::d1(yhat, 0.0, Y, J));
        }
        Cpx acc(0.0, 0.0);
        for (int q = 0; q < ns_; ++q) {
            Cpx v = (*s_)(h_, PhasePoint::d1(yhat, static_cast<double>(q) / ns_, Y, J));
            acc += v * tw_[q * (2 * mu_max_ + 1) + (mu + mu_max_)];
        }
        return acc / static_cast<double>(ns_);
    }

  private:
    const Symbol* s_;
    double h_;
    int mu_max_;
    int ns_;
    bool theta_dep_;
    std::vector<Cpx> tw_;
};

// Y window at a given midpoint/J from the energy hint; fallback cap otherwise.
double y_quad_window(const Symbol& s, double yhat, double J, double fallback_xi) {
    if (s.support.has_energy) {
        double margin = 1.05;
        double avail = 2.0 * s.support.energy * margin - yhat * yhat * J * J;
        if (avail <= 0.0) return 0.0;
        return std::sqrt(avail) / yhat;
    }
    return fallback_xi / yhat;
}

}  // namespace

const std::pair<std::vector<double>, std::vector<double>>& gauss_legendre(int n) {
    static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    // Golub-Welsch on the Legendre Jacobi matrix
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n), sub(std::max(0, n - 1));
    for (int k = 1; k < n; ++k) sub[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub);
    std::vector<double> x(n), w(n);
    for (int k = 0; k < n; ++k) {
        x[k] = es.eigenvalues()[k];
        double v = es.eigenvectors()(0, k);
        w[k] = 2.0 * v * v;
    }
    return cache.emplace(n, std::make_pair(std::move(x), std::move(w))).first->second;
}

namespace {

// integral of (g(Y) - g_inf) exp(i delta Y / h) over [-Ymax, Ymax] by
// Gauss-Legendre panels sized to the oscillation; refined until two successive
// panel counts agree within abs_tol.  hint is a two-int state {panels, calls}
// shared across neighbouring kernel entries.
Cpx oscillatory_integral(const std::function<Cpx(double)>& g, Cpx g_inf, double Ymax,
                         double delta, double h, int base_nodes, double abs_tol,
                         int* hint = nullptr, double feature_scale = 0.0,
                         double* quad_defect = nullptr) {
    double phase = std::abs(delta) * Ymax / h;
    int panels = std::max(1, static_cast<int>(std::ceil(phase / 6.0)));
    int base_panels = std::max(1, (base_nodes + 15) / 16);
    panels = std::max(panels, base_panels);
    if (feature_scale > 0.0) {
        // four nodes per feature width keeps Gauss-Legendre well resolved
        int need = static_cast<int>(std::ceil(2.0 * Ymax / (4.0 * feature_scale)));
        panels = std::max(panels, need);
    }
    if (hint && *hint > 0) panels = std::max(panels, *hint);

    // prescan: when the centered integrand is below the density that could
    // reach abs_tol, the integral is already accounted for
    {
        double density_tol = abs_tol / (2.0 * Ymax + 1e-300);
        double worst = 0.0;
        for (int k = 0; k <= 32; ++k) {
            double Y = -Ymax + 2.0 * Ymax * k / 32.0;
            worst = std::max(worst, std::abs(g(Y) - g_inf));
            if (worst > density_tol) break;
        }
        if (worst <= density_tol) return Cpx(0.0, 0.0);
    }

    auto eval = [&](int np) {
        const auto& [xs, ws] = gauss_legendre(16);
        Cpx acc(0.0, 0.0);
        const double width = 2.0 * Ymax / np;
        for (int p = 0; p < np; ++p) {
            double a = -Ymax + p * width;
            double mid = a + 0.5 * width, half = 0.5 * width;
            for (int k = 0; k < 16; ++k) {
                double Y = mid + half * xs[k];
                Cpx val = g(Y) - g_inf;
                if (val == Cpx(0.0, 0.0)) continue;
                double ang = delta * Y / h;
                acc += ws[k] * half * val * Cpx(std::cos(ang), std::sin(ang));
            }
        }
        return acc;
    };

    if (feature_scale > 0.0) {
        // node counts fixed by geometry: assembled matrices stay exactly
        // linear in the symbol; sampled doubling checks land in the report
        Cpx cur = eval(panels);
        if (quad_defect) {
            int* counter = hint ? hint + 1 : nullptr;
            bool check = !counter || (*counter)++ % 32 == 0;
            if (check) {
                Cpx fine = eval(2 * panels);
                *quad_defect = std::max(*quad_defect, std::abs(fine - cur));
            }
        }
        return cur;
    }

    // unknown feature scale: refine until two successive counts agree
    bool verify = true;
    if (hint && *hint > 0) {
        int* counter = hint + 1;
        verify = (*counter)++ % 8 == 0;
    }
    if (!verify) return eval(panels);

    Cpx prev = eval(panels);
    for (int round = 0; round < 4; ++round) {
        int finer = panels * 2;
        Cpx cur = eval(finer);
        if (std::abs(cur - prev) <= abs_tol) {
            if (hint) *hint = panels;
            return cur;
        }
        panels = finer;
        prev = cur;
    }
    if (hint) *hint = panels;
    return prev;
}

}  // namespace

namespace {

// Fourier transform table of a compactly supported real profile:
// ghat(k) = int g(v) exp(i k v) dv, cubic interpolation on a uniform k grid.
class ProfileTransform {
  public:
    ProfileTransform(const SeparableXi& sep, double k_cap) {
        k_cap_ = std::max(k_cap, 1.0);
        const double span = sep.v_hi - sep.v_lo;
        // resolve ghat (scale 1/span) and the largest phase
        int nk = static_cast<int>(std::ceil(32.0 * k_cap_ * span / kTwoPi)) + 32;
        nk = std::min(nk, 2000000);
        dk_ = k_cap_ / nk;
        table_.resize(nk + 1);
        int nv = std::max(512, static_cast<int>(std::ceil(2.5 * k_cap_ * span / 3.0)));
        nv = std::min(nv, 500000);
        const auto& [xs, ws] = gauss_legendre(24);
        int panels = (nv + 23) / 24;
        std::vector<double> v_nodes, v_weights, g_vals;
        double width = span / panels;
        for (int p = 0; p < panels; ++p) {
            double a = sep.v_lo + p * width;
            for (int q = 0; q < 24; ++q) {
                double v = a + 0.5 * width * (1.0 + xs[q]);
                v_nodes.push_back(v);
                v_weights.push_back(0.5 * width * ws[q]);
                g_vals.push_back(sep.gprof(v));
            }
        }
        for (int ik = 0; ik <= nk; ++ik) {
            double k = ik * dk_;
            Cpx acc(0.0, 0.0);
            for (size_t q = 0; q < v_nodes.size(); ++q) {
                double ang = k * v_nodes[q];
                acc += v_weights[q] * g_vals[q] * Cpx(std::cos(ang), std::sin(ang));
            }
            table_[ik] = acc;
        }
    }

    Cpx eval(double k) const {
        double ak = std::abs(k);
        if (ak >= k_cap_) return Cpx(0.0, 0.0);
        double x = ak / dk_;
        long i1 = std::min(static_cast<long>(x), static_cast<long>(table_.size()) - 2);
        double tfrac = x - i1;
        // 4-point cubic (Catmull-Rom), clamped at the ends
        long i0 = std::max(0L, i1 - 1);
        long i2 = i1 + 1;
        long i3 = std::min(i2 + 1, static_cast<long>(table_.size()) - 1);
        Cpx p0 = table_[i0], p1 = table_[i1], p2 = table_[i2], p3 = table_[i3];
        double t2 = tfrac * tfrac, t3 = t2 * tfrac;
        Cpx val = 0.5 * ((2.0 * p1) + (-p0 + p2) * tfrac +
                         (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2 +
                         (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t3);
        if (k < 0.0) return std::conj(val);
        return val;
    }

  private:
    double k_cap_ = 1.0, dk_ = 1.0;
    std::vector<Cpx> table_;
};

}  // namespace

OperatorMatrix op_matrix(const Symbol& sigma, double h, const GridSpec& grid,
                         double t, bool enforce_support, AssemblyReport* report) {
    grid.validate();
    if (!(h > 0.0)) throw std::invalid_argument("op_matrix: h must be positive");
    if (t < 0.0 || t > 1.0) throw std::invalid_argument("op_matrix: t in [0,1]");

    const int K = grid.mode_max;
    const int mu_max = std::min(sigma.support.theta_modes, 2 * K);
    ThetaModes tm(sigma, h, std::max(1, mu_max), grid.n_theta);
    const double scale = symbol_scale(sigma, h, grid);
    const double fallback_xi = 25.0;

    AssemblyReport rep;

    // Support discipline: the decaying (nonlocal) kernel content must vanish
    // within band_margin ln-units of the band edges; the multiplication part
    // is exempt (it quantizes without truncation error).
    if (enforce_support && scale > 0.0) {
        for (int side = 0; side < 2; ++side) {
            for (int sstep = 0; sstep <= 4; ++sstep) {
                double u = grid.band_margin * sstep / 4.0;
                double yhat = side == 0 ? grid.y_min * std::exp(u)
                                        : grid.y_max * std::exp(-u);
                for (int m = -K; m <= K; ++m) {
                    double J = kTwoPi * h * m;
                    double Ymax = y_quad_window(sigma, yhat, J, fallback_xi);
                    if (Ymax <= 0.0) continue;
                    Cpx gp = tm.mode(0, yhat, 2.5 * Ymax, J);
                    Cpx gm = tm.mode(0, yhat, -2.5 * Ymax, J);
                    Cpx g_inf = (std::abs(gp - gm) <= 1e-11 * scale)
                                    ? 0.5 * (gp + gm)
                                    : Cpx(0.0, 0.0);
                    for (int k = 0; k <= 12; ++k) {
                        double Y = -Ymax + 2.0 * Ymax * k / 12.0;
                        double v = std::abs(tm.mode(0, yhat, Y, J) - g_inf);
                        rep.max_edge_mass = std::max(rep.max_edge_mass, v / scale);
                    }
                }
            }
        }
        if (rep.max_edge_mass > 1e-10)
            throw std::invalid_argument(
                "op_matrix: symbol has nonlocal content within band_margin of the "
                "band edges; truncation untrustworthy");
    }

    OperatorMatrix M;
    M.grid = grid;
    M.h = h;
    M.t = t;
    auto leb = grid.lebesgue();
    const double tiny = 1e-13;
    const int min_walk = 6;
    // midpoint support zone (in y) for the walk logic
    const bool has_zone = sigma.support.has_y;
    const double zone_lo = has_zone ? sigma.support.y_lo * 0.98 : 0.0;
    const double zone_hi = has_zone ? sigma.support.y_hi * 1.02 : 0.0;

    // factored symbols: the Y integral is one tabulated Fourier transform
    std::unique_ptr<ProfileTransform> ptab;
    if (sigma.separable) {
        double k_cap = (grid.y_max - grid.y_min) / (h * grid.y_min) + 16.0;
        ptab = std::make_unique<ProfileTransform>(*sigma.separable, k_cap);
    }
    const int ns_theta = grid.n_theta;
    auto rest_mode = [&](int mu, double yhat, double J) -> Cpx {
        const auto& rest = sigma.separable->rest;
        if (sigma.support.theta_modes == 0)
            return mu == 0 ? rest(h, yhat, 0.0, J) : Cpx(0.0, 0.0);
        Cpx acc(0.0, 0.0);
        for (int q = 0; q < ns_theta; ++q) {
            double ang = -kTwoPi * mu * q / ns_theta;
            acc += rest(h, yhat, static_cast<double>(q) / ns_theta, J) *
                   Cpx(std::cos(ang), std::sin(ang));
        }
        return acc / static_cast<double>(ns_theta);
    };

    for (int n = -K; n <= K; ++n) {
        for (int m = std::max(-K, n - mu_max); m <= std::min(K, n + mu_max); ++m) {
            const int mu = n - m;
            const double J = kTwoPi * h * (m + (1.0 - t) * mu);
            Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(grid.n_y, grid.n_y);
            double block_scale = 0.0;
            bool any = false;
            int quad_hint[2] = {0, 0};

            auto entry = [&](int i, int j) -> Cpx {
                const double yi = grid.y_at(i), yj = grid.y_at(j);
                const double yhat = t * yi + (1.0 - t) * yj;
                if (has_zone && (yhat < sigma.support.y_lo || yhat > sigma.support.y_hi))
                    return Cpx(0.0, 0.0);
                const double delta = yi - yj;
                if (ptab) {
                    Cpx rm = rest_mode(mu, yhat, J);
                    if (rm == Cpx(0.0, 0.0)) return Cpx(0.0, 0.0);
                    Cpx I = rm * ptab->eval(delta / (h * yhat)) / yhat;
                    return std::pow(yi / yj, 0.5 * (grid.chart.d + 1)) * I * leb[j] /
                           (kTwoPi * h);
                }
                const double Ymax = y_quad_window(sigma, yhat, J, fallback_xi);
                if (Ymax <= 0.0) return Cpx(0.0, 0.0);
                Cpx gp = tm.mode(mu, yhat, 2.5 * Ymax, J);
                Cpx gm = tm.mode(mu, yhat, -2.5 * Ymax, J);
                Cpx g_inf = (std::abs(gp - gm) <= 1e-11 * (scale + 1e-300))
                                ? 0.5 * (gp + gm)
                                : Cpx(0.0, 0.0);
                // quadrature-window tail diagnostics
                double tail = std::max(std::abs(tm.mode(mu, yhat, 1.2 * Ymax, J) - g_inf),
                                       std::abs(tm.mode(mu, yhat, -1.2 * Ymax, J) - g_inf));
                rep.max_xi_tail = std::max(rep.max_xi_tail, tail / (scale + 1e-300));
                auto g = [&](double Y) { return tm.mode(mu, yhat, Y, J); };
                double feat = sigma.support.xi_feature > 0.0
                                  ? sigma.support.xi_feature / yhat
                                  : 0.0;
                Cpx I = oscillatory_integral(g, g_inf, Ymax, delta, h, grid.n_quad_y,
                                             3e-11 * (scale + 1e-300), quad_hint, feat,
                                             &rep.max_quad_defect);
                Cpx val = std::pow(yi / yj, 0.5 * (grid.chart.d + 1)) * I * leb[j] /
                          (kTwoPi * h);
                if (i == j) val += g_inf;
                return val;
            };

            // The kernel entry (i, j) vanishes once the midpoint leaves the
            // symbol's y support.  Within the midpoint zone the magnitude
            // profile can dip and resurface (kernel peak at the diagonal,
            // symbol peak at the zone center), so a run of tiny entries is
            // only trusted after a sparse scout ahead stays tiny too.
            auto midpoint_beyond = [&](int i, int j, bool upward) {
                double yhat = t * grid.y_at(i) + (1.0 - t) * grid.y_at(j);
                return upward ? yhat > zone_hi : yhat < zone_lo;
            };

            for (int j = 0; j < grid.n_y; ++j) {
                for (int dir = 0; dir < 2; ++dir) {
                    const bool upward = dir == 0;
                    const int step = upward ? 1 : -1;
                    int consec = 0;
                    int i = upward ? j : j - 1;
                    while (upward ? i < grid.n_y : i >= 0) {
                        if (has_zone && midpoint_beyond(i, j, upward)) break;
                        Cpx v = entry(i, j);
                        B(i, j) = v;
                        double av = std::abs(v);
                        block_scale = std::max(block_scale, av);
                        if (av > tiny * (block_scale + 1e-300)) {
                            consec = 0;
                            rep.retained_bandwidth =
                                std::max(rep.retained_bandwidth, std::abs(i - j));
                            any = true;
                            i += step;
                            continue;
                        }
                        if (++consec >= 3 && std::abs(i - j) >= min_walk) {
                            // scout the remaining zone sparsely before stopping
                            int resume = -1;
                            int s = i + 4 * step;
                            while (upward ? s < grid.n_y : s >= 0) {
                                if (has_zone && midpoint_beyond(s, j, upward)) break;
                                Cpx sv = entry(s, j);
                                if (std::abs(sv) > tiny * (block_scale + 1e-300)) {
                                    resume = s;
                                    break;
                                }
                                s += 4 * step;
                            }
                            if (resume < 0) break;
                            // fill the gap densely and continue from the scout hit
                            for (int q = i + step; q != resume; q += step) {
                                Cpx qv = entry(q, j);
                                B(q, j) = qv;
                                block_scale = std::max(block_scale, std::abs(qv));
                            }
                            consec = 0;
                            i = resume;
                            continue;
                        }
                        i += step;
                    }
                }
            }
            if (any) M.blocks[{n, m}] = std::move(B);
        }
    }
    if (report) *report = rep;
    return M;
}

OperatorMatrix multiplication_matrix(const Symbol& sigma_x, const GridSpec& grid,
                                     double h) {
    grid.validate();
    const int K = grid.mode_max;
    const int mu_max = std::min(sigma_x.support.theta_modes, 2 * K);
    ThetaModes tm(sigma_x, h, std::max(1, mu_max), grid.n_theta);
    OperatorMatrix M;
    M.grid = grid;
    M.h = h;
    for (int n = -K; n <= K; ++n)
        for (int m = std::max(-K, n - mu_max); m <= std::min(K, n + mu_max); ++m) {
            Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(grid.n_y, grid.n_y);
            bool any = false;
            for (int j = 0; j < grid.n_y; ++j) {
                Cpx v = tm.mode(n - m, grid.y_at(j), 0.0, 0.0);
                B(j, j) = v;
                if (std::abs(v) > 0.0) any = true;
            }
            if (any) M.blocks[{n, m}] = std::move(B);
        }
    return M;
}

LaplacianBlocks laplacian_blocks(double h, const GridSpec& grid) {
    grid.validate();
    LaplacianBlocks lap;
    lap.grid = grid;
    lap.h = h;
    const int ny = grid.n_y;
    const double du = grid.du();
    const double c = 0.5 * h * h;
    const double d = grid.chart.d;
    for (int n = -grid.mode_max; n <= grid.mode_max; ++n) {
        double omega = kTwoPi * std::abs(n);
        Eigen::VectorXd diag(ny), sub(ny - 1);
        for (int j = 0; j < ny; ++j) {
            double y = grid.y_at(j);
            diag[j] = c * (2.0 / (du * du) + 0.25 * d * d + omega * omega * y * y);
        }
        for (int j = 0; j + 1 < ny; ++j) sub[j] = -c / (du * du);
        // Dirichlet rows: decouple both boundary nodes
        sub[0] = 0.0;
        sub[ny - 2] = 0.0;
        lap.diag.push_back(std::move(diag));
        lap.sub.push_back(std::move(sub));
    }
    return lap;
}

OperatorMatrix LaplacianBlocks::to_matrix() const {
    OperatorMatrix M;
    M.grid = grid;
    M.h = h;
    const int ny = grid.n_y;
    const double dd = grid.chart.d;
    for (int n = -grid.mode_max; n <= grid.mode_max; ++n) {
        const auto& di = diag[n + grid.mode_max];
        const auto& su = sub[n + grid.mode_max];
        Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(ny, ny);
        for (int j = 0; j < ny; ++j) B(j, j) = di[j];
        for (int j = 0; j + 1 < ny; ++j) {
            if (su[j] == 0.0) continue;
            double yi = grid.y_at(j), yj = grid.y_at(j + 1);
            // flat-picture tridiagonal conjugated back: P = D^{-1} T D, D = y^{-d/2}
            B(j, j + 1) = su[j] * std::pow(yi / yj, 0.5 * dd);
            B(j + 1, j) = su[j] * std::pow(yj / yi, 0.5 * dd);
        }
        M.blocks[{n, n}] = std::move(B);
    }
    return M;
}

OperatorMatrix laplacian_matrix(double h, const GridSpec& grid) {
    return laplacian_blocks(h, grid).to_matrix();
}

SpectralP spectral_p(const LaplacianBlocks& lap) {
    SpectralP sp;
    sp.grid = lap.grid;
    sp.h = lap.h;
    for (size_t b = 0; b < lap.diag.size(); ++b) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
        es.computeFromTridiagonal(lap.diag[b], lap.sub[b]);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("spectral_p: tridiagonal eigensolve failed");
        sp.eigenvalues.push_back(es.eigenvalues());
        sp.eigenvectors.push_back(es.eigenvectors());
    }
    return sp;
}

OperatorMatrix SpectralP::map_function_cpx(const std::function<Cpx(double)>& g) const {
    OperatorMatrix M;
    M.grid = grid;
    M.h = h;
    const int ny = grid.n_y;
    const double d = grid.chart.d;
    Eigen::VectorXd dvec(ny);
    for (int j = 0; j < ny; ++j) dvec[j] = std::pow(grid.y_at(j), -0.5 * d);
    for (int n = -grid.mode_max; n <= grid.mode_max; ++n) {
        const auto& V = eigenvectors[n + grid.mode_max];
        const auto& lam = eigenvalues[n + grid.mode_max];
        Eigen::VectorXcd glam(ny);
        for (int k = 0; k < ny; ++k) glam[k] = g(lam[k]);
        Eigen::MatrixXcd core = V.cast<Cpx>() * glam.asDiagonal() *
                                V.transpose().cast<Cpx>();
        for (int i = 0; i < ny; ++i)
            for (int j = 0; j < ny; ++j) core(i, j) *= dvec[j] / dvec[i];
        M.blocks[{n, n}] = std::move(core);
    }
    return M;
}

OperatorMatrix SpectralP::map_function(const std::function<double(double)>& g) const {
    return map_function_cpx([&](double x) { return Cpx(g(x), 0.0); });
}

DiscreteFunction SpectralP::apply_function(const std::function<Cpx(double)>& g,
                                           const DiscreteFunction& f) const {
    DiscreteFunction out = DiscreteFunction::zero(grid);
    const int ny = grid.n_y;
    const double d = grid.chart.d;
    Eigen::VectorXd dvec(ny);
    for (int j = 0; j < ny; ++j) dvec[j] = std::pow(grid.y_at(j), -0.5 * d);
    for (int n = -grid.mode_max; n <= grid.mode_max; ++n) {
        const auto& V = eigenvectors[n + grid.mode_max];
        const auto& lam = eigenvalues[n + grid.mode_max];
        Eigen::VectorXcd flat = f.modes.col(n + grid.mode_max);
        for (int j = 0; j < ny; ++j) flat[j] *= dvec[j];
        Eigen::VectorXcd coef = V.transpose().cast<Cpx>() * flat;
        for (int k = 0; k < ny; ++k) coef[k] *= g(lam[k]);
        Eigen::VectorXcd back = V.cast<Cpx>() * coef;
        for (int j = 0; j < ny; ++j) back[j] /= dvec[j];
        out.modes.col(n + grid.mode_max) = back;
    }
    return out;
}

double SpectralP::min_eigenvalue() const {
    double m = std::numeric_limits<double>::max();
    for (const auto& lam : eigenvalues) m = std::min(m, lam.minCoeff());
    return m;
}

double sobolev_norm(const DiscreteFunction& f, double s, const SpectralP& sp) {
    if (sp.min_eigenvalue() + 1.0 < -1e-10)
        throw std::runtime_error("sobolev_norm: P + 1 has a negative eigenvalue");
    DiscreteFunction g = sp.apply_function(
        [s](double lam) {
            double base = std::max(0.0, 1.0 + lam);
            return Cpx(std::pow(base, 0.5 * s), 0.0);
        },
        f);
    return g.norm();
}

OperatorMatrix projector_nonzero(const GridSpec& grid, double a, double h) {
    grid.validate();
    OperatorMatrix M;
    M.grid = grid;
    M.h = h;
    for (int n = -grid.mode_max; n <= grid.mode_max; ++n) {
        Eigen::MatrixXcd B = Eigen::MatrixXcd::Identity(grid.n_y, grid.n_y);
        if (n == 0)
            for (int j = 0; j < grid.n_y; ++j)
                if (grid.y_at(j) > a) B(j, j) = 0.0;
        M.blocks[{n, n}] = std::move(B);
    }
    return M;
}

double schur_bound(const OperatorMatrix& M, double tau) {
    const GridSpec& g = M.grid;
    const int ny = g.n_y, nt = g.n_theta, nm = g.n_modes();
    auto leb = g.lebesgue();
    const double dd = g.chart.d;

    // mode-phase matrix E(q, c) = exp(2 pi i (c - K) q / nt)
    Eigen::MatrixXcd E(nt, nm);
    for (int q = 0; q < nt; ++q)
        for (int c = 0; c < nm; ++c) {
            double ang = kTwoPi * (c - g.mode_max) * q / nt;
            E(q, c) = Cpx(std::cos(ang), std::sin(ang));
        }

    std::vector<double> row_sum(ny * nt, 0.0), col_sum(ny * nt, 0.0);
    Eigen::MatrixXcd Mhat(nm, nm), Kpq(nt, nt);
    for (int i = 0; i < ny; ++i) {
        double yi = g.y_at(i);
        for (int j = 0; j < ny; ++j) {
            double yj = g.y_at(j);
            Mhat.setZero();
            bool any = false;
            for (const auto& [key, b] : M.blocks) {
                Cpx v = b(i, j);
                if (v != Cpx(0.0, 0.0)) {
                    Mhat(key.first + g.mode_max, key.second + g.mode_max) = v;
                    any = true;
                }
            }
            if (!any) continue;
            Kpq = E * Mhat * E.adjoint();  // kernel values times leb[j]
            for (int p = 0; p < nt; ++p)
                for (int q = 0; q < nt; ++q) {
                    double kabs = std::abs(Kpq(p, q)) / leb[j];
                    if (kabs == 0.0) continue;
                    row_sum[i * nt + p] +=
                        std::pow(yj / yi, dd + 1.0 + tau) * kabs * leb[j] / nt;
                    col_sum[j * nt + q] += std::pow(yi / yj, tau) * kabs * leb[i] / nt;
                }
        }
    }
    double r = 0.0, c = 0.0;
    for (double v : row_sum) r = std::max(r, v);
    for (double v : col_sum) c = std::max(c, v);
    return r * c;
}

Cpx weyl_kernel(const Symbol& sigma, double h, const PhasePoint& x,
                const PhasePoint& xp, const GridSpec& grid) {
    if (!(h > 0.0)) throw std::invalid_argument("weyl_kernel: h > 0 required");
    const int K = grid.mode_max;
    const int mu_max = std::min(sigma.support.theta_modes, 2 * K);
    ThetaModes tm(sigma, h, std::max(1, mu_max), grid.n_theta);
    const double scale = symbol_scale(sigma, h, grid);
    const double fallback_xi = 25.0;
    const double yhat = 0.5 * (x.y + xp.y);
    const double delta = x.y - xp.y;

    Cpx acc(0.0, 0.0);
    for (int n = -K; n <= K; ++n)
        for (int m = std::max(-K, n - mu_max); m <= std::min(K, n + mu_max); ++m) {
            const int mu = n - m;
            const double J = kTwoPi * h * (m + 0.5 * mu);
            double Ymax = y_quad_window(sigma, yhat, J, fallback_xi);
            if (Ymax <= 0.0) continue;
            Cpx gp = tm.mode(mu, yhat, 2.5 * Ymax, J);
            Cpx gm = tm.mode(mu, yhat, -2.5 * Ymax, J);
            if (std::abs(gp) + std::abs(gm) > 1e-9 * (scale + 1e-300))
                throw std::invalid_argument(
                    "weyl_kernel: symbol kernel has a multiplication part");
            auto gfun = [&](double Y) { return tm.mode(mu, yhat, Y, J); };
            Cpx I = oscillatory_integral(gfun, Cpx(0.0, 0.0), Ymax, delta, h, grid.n_quad_y,
                                         1e-12 * (scale + 1e-300));
            double ang = kTwoPi * (n * x.theta[0] - m * xp.theta[0]);
            acc += I * Cpx(std::cos(ang), std::sin(ang));
        }
    return std::pow(x.y / xp.y, 0.5 * (grid.chart.d + 1)) * acc / (kTwoPi * h);
}

TranslateKernelResult weyl_kernel_translates(const Symbol& sigma, double h,
                                             const PhasePoint& x, const PhasePoint& xp,
                                             const GridSpec& grid, int max_translates) {
    if (!sigma.support.has_energy)
        throw std::invalid_argument(
            "weyl_kernel_translates: needs an energy support hint for the (Y, J) window");
    TranslateKernelResult res;
    const double yhat = 0.5 * (x.y + xp.y);
    const double delta_y = x.y - xp.y;
    const double xi_max = std::sqrt(2.0 * sigma.support.energy * 1.05);
    const double Ymax = xi_max / yhat, Jmax = xi_max / yhat;

    auto translate_value = [&](long k) -> Cpx {
        double dtheta = x.theta[0] - xp.theta[0] - static_cast<double>(k);
        double theta_mid = 0.5 * (x.theta[0] + xp.theta[0] + static_cast<double>(k));
        // inner Y integral for each J node, outer oscillatory J integral;
        // both convergence-checked
        auto inner_of_J = [&](double J) -> Cpx {
            auto g = [&](double Y) {
                return sigma(h, PhasePoint::d1(yhat, theta_mid, Y, J));
            };
            return oscillatory_integral(g, Cpx(0.0, 0.0), Ymax, delta_y, h,
                                        grid.n_quad_y, 1e-13);
        };
        return oscillatory_integral(inner_of_J, Cpx(0.0, 0.0), Jmax, dtheta, h,
                                    grid.n_quad_y, 1e-12);
    };

    Cpx sum(0.0, 0.0);
    double last = 0.0;
    int used = 0;
    for (long k = 0; k <= max_translates; ++k) {
        Cpx contrib = translate_value(k);
        if (k > 0) contrib += translate_value(-k);
        sum += contrib;
        ++used;
        last = std::abs(contrib);
        if (used >= 5 && last <= 1e-10 * (std::abs(sum) + 1e-300)) break;
    }
    res.value = std::pow(x.y / xp.y, 0.5 * (grid.chart.d + 1)) * sum /
                std::pow(kTwoPi * h, 2.0);
    res.translates_used = used;
    res.last_contribution = last / (std::abs(sum) + 1e-300);
    res.truncation_warning = res.last_contribution > 1e-10;
    return res;
}

OperatorMatrix mask_kernel(const OperatorMatrix& M,
                           const std::function<double(double)>& eta) {
    OperatorMatrix out;
    out.grid = M.grid;
    out.h = M.h;
    out.t = M.t;
    for (const auto& [k, b] : M.blocks) {
        Eigen::MatrixXcd masked = b;
        for (int i = 0; i < M.grid.n_y; ++i) {
            double yi = M.grid.y_at(i);
            for (int j = 0; j < M.grid.n_y; ++j) {
                double yj = M.grid.y_at(j);
                masked(i, j) *= eta(yj / yi - yi / yj);
            }
        }
        out.blocks[k] = std::move(masked);
    }
    return out;
}

}  // namespace cuspml
