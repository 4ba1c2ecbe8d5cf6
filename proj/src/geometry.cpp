#include "cuspml/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace cuspml {

CuspChart::CuspChart() : d(1), lattice(Eigen::MatrixXd::Identity(1, 1)), a(1.0) {}

CuspChart::CuspChart(int dim, Eigen::MatrixXd basis, double base_height)
    : d(dim), lattice(std::move(basis)), a(base_height) {
    validate();
}

void CuspChart::validate() const {
    if (d < 1 || d > 4) throw std::invalid_argument("CuspChart: d must be in [1,4]");
    if (lattice.rows() != d || lattice.cols() != d)
        throw std::invalid_argument("CuspChart: lattice must be d x d");
    if (!(a > 0.0)) throw std::invalid_argument("CuspChart: base height must be positive");
    double det = std::abs(lattice.determinant());
    if (std::abs(det - 1.0) > 1e-12)
        throw std::invalid_argument("CuspChart: lattice covolume must be 1");
}

nlohmann::json CuspChart::to_json() const {
    nlohmann::json j;
    j["d"] = d;
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < d; ++i) {
        std::vector<double> r;
        for (int k = 0; k < d; ++k) r.push_back(lattice(i, k));
        rows.push_back(r);
    }
    j["lattice"] = rows;
    j["a"] = a;
    return j;
}

CuspChart CuspChart::from_json(const nlohmann::json& j) {
    int d = j.at("d").get<int>();
    auto rows = j.at("lattice").get<std::vector<std::vector<double>>>();
    Eigen::MatrixXd basis(d, d);
    for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k) basis(i, k) = rows.at(i).at(k);
    return CuspChart(d, basis, j.at("a").get<double>());
}

double cometric(const PhasePoint& p) {
    return p.y * p.y * (p.Y * p.Y + p.J.squaredNorm());
}

double hamiltonian(const PhasePoint& p) { return 0.5 * cometric(p); }

Eigen::MatrixXd sasaki_gram(const PhasePoint& p) {
    const int d = p.dim();
    const int n = 2 * d + 2;
    const double y = p.y;
    const double twop = cometric(p);
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
    // frame order: 0 = X_y, 1..d = X_theta_i, d+1 = X_Y, d+2..2d+1 = X_J_i
    const int iY = d + 1;
    G(0, 0) = 1.0 + twop;
    for (int i = 0; i < d; ++i) G(1 + i, 1 + i) = 1.0 + twop;
    G(iY, iY) = 1.0;
    for (int i = 0; i < d; ++i) G(iY + 1 + i, iY + 1 + i) = 1.0;

    G(0, iY) = G(iY, 0) = -y * p.Y;
    for (int i = 0; i < d; ++i) {
        G(0, iY + 1 + i) = G(iY + 1 + i, 0) = -y * p.J[i];
        G(1 + i, iY) = G(iY, 1 + i) = y * p.J[i];
        G(1 + i, iY + 1 + i) = G(iY + 1 + i, 1 + i) = -y * p.Y;
    }
    return G;
}

Eigen::VectorXd covariant_table(int i, int j, int d) {
    if (i < 0 || i > d || j < 0 || j > d)
        throw std::out_of_range("covariant_table: frame index out of range");
    Eigen::VectorXd c = Eigen::VectorXd::Zero(d + 1);
    if (i == 0) return c;          // nabla_{X_y} X_y = 0, nabla_{X_y} X_theta = 0
    if (j == 0) {                  // nabla_{X_theta_i} X_y = -X_theta_i
        c[i] = -1.0;
        return c;
    }
    if (i == j) c[0] = 1.0;        // nabla_{X_theta_i} X_theta_i = X_y
    return c;
}

void ModularPoint::validate() const {
    if (!(z.imag() > 0.0)) throw std::invalid_argument("ModularPoint: Im z must be positive");
    if (std::abs(g.determinant() - 1.0) > 1e-10)
        throw std::invalid_argument("ModularPoint: direction matrix must have det 1");
}

namespace {
// nearest integer with ties toward +1/2 staying at +1/2 after subtraction
double round_ties_down(double x) {
    double n = std::floor(x + 0.5);
    if (x - n == -0.5) n -= 1.0;  // keep Re z = +1/2
    return n;
}
}  // namespace

ReduceResult modular_reduce(std::complex<double> z) {
    if (!(z.imag() > 0.0)) throw std::invalid_argument("modular_reduce: Im z must be positive");
    Eigen::Matrix2d gamma = Eigen::Matrix2d::Identity();
    const int max_steps = 10000;
    int steps = 0;
    for (; steps < max_steps; ++steps) {
        double n = round_ties_down(z.real());
        if (n != 0.0) {
            z -= n;
            Eigen::Matrix2d T;
            T << 1, -n, 0, 1;
            gamma = T * gamma;
        }
        double r2 = std::norm(z);
        if (r2 < 1.0 - 1e-15) {
            z = -1.0 / z;
            Eigen::Matrix2d S;
            S << 0, -1, 1, 0;
            gamma = S * gamma;
            continue;
        }
        if (r2 <= 1.0 + 1e-15 && z.real() < -1e-15) {
            // boundary arc: keep the right half of |z| = 1
            z = -1.0 / z;
            Eigen::Matrix2d S;
            S << 0, -1, 1, 0;
            gamma = S * gamma;
            continue;
        }
        return ReduceResult{z, gamma, steps};
    }
    throw BudgetError("modular_reduce: no convergence after 1e4 steps");
}

}  // namespace cuspml
