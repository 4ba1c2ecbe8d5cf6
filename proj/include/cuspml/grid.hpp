#pragma once

#include <Eigen/Dense>
#include <map>
#include <utility>
#include <vector>

#include "cuspml/geometry.hpp"
#include "cuspml/symbol.hpp"
#include "json.hpp"

namespace cuspml {

// Discretization of the cusp band [y_min, y_max]: log-uniform y grid times
// theta Fourier modes.  Desk scale is d = 1.
struct GridSpec {
    CuspChart chart;
    double y_min = 1.0;
    double y_max = 10.0;
    int n_y = 96;        // log-uniform nodes, endpoints included
    int n_theta = 16;    // theta samples per dimension, >= 2 mode_max + 2
    int mode_max = 4;    // matrix modes n in [-mode_max, mode_max]
    int n_quad_y = 32;   // baseline Gauss-Legendre nodes for the Y integral
    double band_margin = 0.2;  // required support clearance in ln-units

    void validate() const;

    // resolution rule: du <= beta h / xi_max so the fastest kernel phase
    // y xi / h stays resolved on the log grid
    static GridSpec tuned(double y_min, double y_max, double h_min, double xi_max,
                          int mode_max, double beta = 0.15);

    double du() const { return (std::log(y_max) - std::log(y_min)) / (n_y - 1); }
    double y_at(int j) const { return y_min * std::exp(j * du()); }
    int n_modes() const { return 2 * mode_max + 1; }
    int dim() const { return n_y * n_modes(); }

    // L^2(Z) quadrature weights w_j = y_j^{-d} du (trapezoid ends halved)
    std::vector<double> weights() const;
    // Lebesgue dy weights y_j du (trapezoid ends halved)
    std::vector<double> lebesgue() const;

    nlohmann::json to_json() const;
    static GridSpec from_json(const nlohmann::json& j);
};

// Function on the band stored by theta modes: column c holds mode m = c - mode_max.
struct DiscreteFunction {
    GridSpec grid;
    Eigen::MatrixXcd modes;  // n_y x n_modes

    static DiscreteFunction zero(const GridSpec& g);
    // sample f(y, theta) on the (y, theta) grid and transform to modes
    static DiscreteFunction from_function(
        const GridSpec& g, const std::function<Cpx(double, double)>& f);
    static DiscreteFunction from_mode(const GridSpec& g, int mode,
                                      const Eigen::VectorXcd& column);

    Eigen::MatrixXcd to_theta_grid() const;  // n_y x n_theta samples
    Cpx inner(const DiscreteFunction& other) const;  // sum f conj(g) w
    double norm() const;
};

// Dense block operator on DiscreteFunction coefficients; block (n, m) maps
// mode m to mode n.  Records the semiclassical parameter and the quantization
// parameter t (Weyl t = 1/2).
struct OperatorMatrix {
    GridSpec grid;
    double h = 0.1;
    double t = 0.5;
    std::map<std::pair<int, int>, Eigen::MatrixXcd> blocks;

    bool has_block(int n, int m) const;
    const Eigen::MatrixXcd* block(int n, int m) const;
    Eigen::MatrixXcd& block_ref(int n, int m);
    bool block_diagonal() const;

    DiscreteFunction apply(const DiscreteFunction& f) const;
    Eigen::MatrixXcd to_dense() const;  // index (n + mode_max) * n_y + j

    // algebra
    static OperatorMatrix identity(const GridSpec& g, double h);
    OperatorMatrix mul(const OperatorMatrix& other) const;
    OperatorMatrix add(const OperatorMatrix& other, Cpx ca = 1.0, Cpx cb = 1.0) const;
    OperatorMatrix scale(Cpx c) const;
    // adjoint with respect to the weighted inner product
    OperatorMatrix adjoint() const;

    // norms with respect to the weighted inner product
    double op_norm() const;
    double frobenius() const;
    double trace_real() const;
    Cpx trace() const;
};

// binary export: header "CUSPML01", int64 rows/cols, complex128 row-major,
// with a JSON sidecar describing the grid
void write_matrix_binary(const Eigen::MatrixXcd& m, const std::string& path);
Eigen::MatrixXcd read_matrix_binary(const std::string& path);
void write_sidecar(const GridSpec& g, const std::string& path);

}  // namespace cuspml
