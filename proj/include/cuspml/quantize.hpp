#pragma once

#include <optional>

#include "cuspml/grid.hpp"

namespace cuspml {

struct AssemblyReport {
    double max_edge_mass = 0.0;   // decaying kernel content at the band edges
    double max_xi_tail = 0.0;     // worst |g - g_inf| beyond the Y quadrature window
    double max_quad_defect = 0.0; // sampled doubling check of the Y quadrature
    int retained_bandwidth = 0;   // widest |i - j| kept by the adaptive cutoff
};

// Quantized operator on the grid: theta handled exactly by Fourier modes
// (block (n, m) evaluates the symbol's mode n - m at J = 2 pi h (m + (1-t)(n-m))),
// the Y integral by adaptive Gauss-Legendre panels on [-Y_max, Y_max] after
// splitting off the large-Y constant, which quantizes exactly as a
// multiplication (grid-diagonal) part.  t = 1/2 is the Weyl case.
//
// Throws std::invalid_argument when the symbol carries decaying kernel content
// within band_margin ln-units of the band edges (untrustworthy truncation);
// enforce_support = false skips that check.
OperatorMatrix op_matrix(const Symbol& sigma, double h, const GridSpec& grid,
                         double t = 0.5, bool enforce_support = true,
                         AssemblyReport* report = nullptr);

// Exact multiplication matrix of an x-only symbol (oracle for the Weyl
// quantization of multiplication symbols, and the cutoff operators).
OperatorMatrix multiplication_matrix(const Symbol& sigma_x, const GridSpec& grid,
                                     double h);

// Semiclassical Laplacian P = -h^2 Delta / 2, finite-differenced on the log-y
// grid, Dirichlet rows at both ends.  Identically Hermitian for the weighted
// inner product; block-diagonal over theta modes.
struct LaplacianBlocks {
    GridSpec grid;
    double h = 0.1;
    std::vector<Eigen::VectorXd> diag;  // flat-picture tridiagonal, per mode
    std::vector<Eigen::VectorXd> sub;   // subdiagonals (boundary entries zero)

    OperatorMatrix to_matrix() const;
};
LaplacianBlocks laplacian_blocks(double h, const GridSpec& grid);
OperatorMatrix laplacian_matrix(double h, const GridSpec& grid);

// Eigendecomposition of P per mode, reusable by the propagator, Sobolev norms
// and functions of P.
struct SpectralP {
    GridSpec grid;
    double h = 0.1;
    std::vector<Eigen::VectorXd> eigenvalues;   // per mode
    std::vector<Eigen::MatrixXd> eigenvectors;  // flat-picture orthogonal

    // matrix of g(P) acting on coefficient vectors
    OperatorMatrix map_function(const std::function<double(double)>& g) const;
    OperatorMatrix map_function_cpx(const std::function<Cpx(double)>& g) const;
    DiscreteFunction apply_function(const std::function<Cpx(double)>& g,
                                    const DiscreteFunction& f) const;
    double min_eigenvalue() const;
};
SpectralP spectral_p(const LaplacianBlocks& lap);

// ||(P+1)^{s/2} f||; s = 0 is the L^2 norm.
double sobolev_norm(const DiscreteFunction& f, double s, const SpectralP& sp);

// Projection on nonzero theta modes above height a:
// (Pi* f)(y, theta) = f - 1(y > a) integral of f over theta.
OperatorMatrix projector_nonzero(const GridSpec& grid, double a, double h);

// Discretized Schur bound C(A, tau) for the kernel of M with respect to the
// Lebesgue measure on the half-cylinder; ||M||^2 <= C(A, tau) up to grid slack.
// Returns nullopt-like infinity when a row/column sum diverges on the grid.
double schur_bound(const OperatorMatrix& M, double tau);

// Pointwise periodized kernel via the mode route (exact in theta, adaptive
// Gauss-Legendre in Y).  Requires a symbol whose kernel has no multiplication
// part (decaying in Y).  x = (y, theta), xp = (y', theta').
Cpx weyl_kernel(const Symbol& sigma, double h, const PhasePoint& x,
                const PhasePoint& xp, const GridSpec& grid);

// Lattice-translate route: sums k over Z with per-translate (Y, J) quadrature;
// keeps at least five translates and reports the relative size of the last
// retained one (> 1e-10 of the running sum signals untrustworthy truncation).
struct TranslateKernelResult {
    Cpx value{0.0, 0.0};
    int translates_used = 0;
    double last_contribution = 0.0;
    bool truncation_warning = false;
};
TranslateKernelResult weyl_kernel_translates(const Symbol& sigma, double h,
                                             const PhasePoint& x,
                                             const PhasePoint& xp,
                                             const GridSpec& grid,
                                             int max_translates = 24);

// Kernel mask by eta(y'/y - y/y') applied entrywise (pseudo-locality checks).
OperatorMatrix mask_kernel(const OperatorMatrix& M,
                           const std::function<double(double)>& eta);

// Gauss-Legendre nodes and weights on [-1, 1], cached per count.
const std::pair<std::vector<double>, std::vector<double>>& gauss_legendre(int n);

}  // namespace cuspml
