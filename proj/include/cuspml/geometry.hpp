#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>

#include "json.hpp"

namespace cuspml {

// Small vectors in the torus / momentum directions. Dimension d stays tiny
// (the desk-scale default is d = 1), so cap the size to keep them on the stack.
using VecT = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 4, 1>;

inline VecT vec1(double v) {
    VecT r(1);
    r[0] = v;
    return r;
}

// The model cusp Z_Lambda = R^+ x R^d/Lambda with metric (dy^2 + dtheta^2)/y^2.
// The lattice is stored as a d x d basis matrix of covolume 1, the base height
// a marks where the cusp neighbourhood starts.
struct CuspChart {
    int d = 1;
    Eigen::MatrixXd lattice;  // columns are basis vectors, |det| == 1
    double a = 1.0;

    CuspChart();
    CuspChart(int dim, Eigen::MatrixXd basis, double base_height);

    void validate() const;

    nlohmann::json to_json() const;
    static CuspChart from_json(const nlohmann::json& j);
};

// A point of T*Z in the coordinates (y, theta, Y, J) with xi = Y dy + J dtheta.
struct PhasePoint {
    double y = 1.0;
    VecT theta;
    double Y = 0.0;
    VecT J;

    PhasePoint() : theta(vec1(0.0)), J(vec1(0.0)) {}
    PhasePoint(double y_, VecT theta_, double Y_, VecT J_)
        : y(y_), theta(std::move(theta_)), Y(Y_), J(std::move(J_)) {}

    static PhasePoint d1(double y, double theta, double Y, double J) {
        return PhasePoint(y, vec1(theta), Y, vec1(J));
    }

    int dim() const { return static_cast<int>(theta.size()); }
};

// |xi|^2_x = y^2 (Y^2 + |J|^2)
double cometric(const PhasePoint& p);

// p = |xi|^2_x / 2, the principal symbol of P = -h^2 Delta / 2.
double hamiltonian(const PhasePoint& p);

// Gram matrix of the Sasaki metric in the frame
// (X_y, X_theta_1..d, X_Y, X_J_1..d).  Entries:
//   g(X_y) = g(X_theta_i) = 1 + 2p,  g(X_Y) = g(X_J_i) = 1,
//   <X_y, X_Y> = -yY,  <X_y, X_J_i> = -yJ_i,
//   <X_theta_i, X_Y> = yJ_i,  <X_theta_i, X_J_k> = -delta_ik yY,
// all other pairs orthogonal.  det = (1 + y^2 |J|^2)^(d-1).
Eigen::MatrixXd sasaki_gram(const PhasePoint& p);

// Frame indices for the covariant-derivative table: 0 = y, 1..d = theta_i.
// Returns the coefficients of nabla_{X_i} X_j over the space frame
// (X_y, X_theta_1..d).
Eigen::VectorXd covariant_table(int i, int j, int d);

// Point on the modular surface: z in the upper half plane together with the
// group element (det 1) that realises it as g * i with its direction.
struct ModularPoint {
    std::complex<double> z;
    Eigen::Matrix2d g = Eigen::Matrix2d::Identity();

    void validate() const;
};

struct ReduceResult {
    std::complex<double> z;
    Eigen::Matrix2d gamma;  // reducing element: z_reduced = gamma . z
    int steps = 0;
};

// PSL(2,Z) reduction to the fundamental domain |Re z| <= 1/2, |z| >= 1.
// Boundary ties resolved to Re z = +1/2 and the right half of |z| = 1.
// Throws after 1e4 steps (numerical degeneracy near the real axis).
ReduceResult modular_reduce(std::complex<double> z);

// Signals an exhausted numerical budget (iteration caps, quadrature limits).
struct BudgetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace cuspml
