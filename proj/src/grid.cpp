#include "cuspml/grid.hpp"

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace cuspml {

namespace {
const double kTwoPi = 6.283185307179586476925287;
}

void GridSpec::validate() const {
    chart.validate();
    if (chart.d != 1)
        throw std::invalid_argument("GridSpec: quantization layer implements d = 1");
    if (!(y_min > 0.0) || !(y_max > y_min))
        throw std::invalid_argument("GridSpec: need 0 < y_min < y_max");
    if (n_y < 8) throw std::invalid_argument("GridSpec: n_y too small");
    if (n_theta < 2 * mode_max + 2)
        throw std::invalid_argument("GridSpec: n_theta must be >= 2 mode_max + 2");
    if (mode_max < 0 || n_quad_y < 4) throw std::invalid_argument("GridSpec: bad counts");
}

GridSpec GridSpec::tuned(double y_min, double y_max, double h_min, double xi_max,
                         int mode_max, double beta) {
    GridSpec g;
    g.y_min = y_min;
    g.y_max = y_max;
    g.mode_max = mode_max;
    g.n_theta = std::max(8, 2 * mode_max + 4);
    double du = beta * h_min / std::max(xi_max, 1e-6);
    int n = static_cast<int>(std::ceil((std::log(y_max) - std::log(y_min)) / du)) + 1;
    g.n_y = std::max(48, n);
    g.validate();
    return g;
}

std::vector<double> GridSpec::weights() const {
    std::vector<double> w(n_y);
    const double step = du();
    for (int j = 0; j < n_y; ++j) {
        double c = (j == 0 || j == n_y - 1) ? 0.5 : 1.0;
        w[j] = c * step * std::pow(y_at(j), -chart.d);
    }
    return w;
}

std::vector<double> GridSpec::lebesgue() const {
    std::vector<double> w(n_y);
    const double step = du();
    for (int j = 0; j < n_y; ++j) {
        double c = (j == 0 || j == n_y - 1) ? 0.5 : 1.0;
        w[j] = c * step * y_at(j);
    }
    return w;
}

nlohmann::json GridSpec::to_json() const {
    nlohmann::json j;
    j["chart"] = chart.to_json();
    j["y_min"] = y_min;
    j["y_max"] = y_max;
    j["n_y"] = n_y;
    j["n_theta"] = n_theta;
    j["mode_max"] = mode_max;
    j["n_quad_y"] = n_quad_y;
    j["band_margin"] = band_margin;
    return j;
}

GridSpec GridSpec::from_json(const nlohmann::json& j) {
    GridSpec g;
    if (j.contains("chart")) g.chart = CuspChart::from_json(j.at("chart"));
    g.y_min = j.value("y_min", g.y_min);
    g.y_max = j.value("y_max", g.y_max);
    g.n_y = j.value("n_y", g.n_y);
    g.n_theta = j.value("n_theta", g.n_theta);
    g.mode_max = j.value("mode_max", g.mode_max);
    g.n_quad_y = j.value("n_quad_y", g.n_quad_y);
    g.band_margin = j.value("band_margin", g.band_margin);
    g.validate();
    return g;
}

DiscreteFunction DiscreteFunction::zero(const GridSpec& g) {
    DiscreteFunction f;
    f.grid = g;
    f.modes = Eigen::MatrixXcd::Zero(g.n_y, g.n_modes());
    return f;
}

DiscreteFunction DiscreteFunction::from_function(
    const GridSpec& g, const std::function<Cpx(double, double)>& fn) {
    DiscreteFunction f = zero(g);
    const int nt = g.n_theta;
    Eigen::VectorXcd row(nt);
    for (int j = 0; j < g.n_y; ++j) {
        double y = g.y_at(j);
        for (int q = 0; q < nt; ++q) row[q] = fn(y, static_cast<double>(q) / nt);
        for (int c = 0; c < g.n_modes(); ++c) {
            int m = c - g.mode_max;
            Cpx acc(0.0, 0.0);
            for (int q = 0; q < nt; ++q) {
                double ang = -kTwoPi * m * q / nt;
                acc += row[q] * Cpx(std::cos(ang), std::sin(ang));
            }
            f.modes(j, c) = acc / static_cast<double>(nt);
        }
    }
    return f;
}

DiscreteFunction DiscreteFunction::from_mode(const GridSpec& g, int mode,
                                             const Eigen::VectorXcd& column) {
    if (std::abs(mode) > g.mode_max)
        throw std::invalid_argument("DiscreteFunction: mode outside grid");
    DiscreteFunction f = zero(g);
    f.modes.col(mode + g.mode_max) = column;
    return f;
}

Eigen::MatrixXcd DiscreteFunction::to_theta_grid() const {
    const int nt = grid.n_theta;
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(grid.n_y, nt);
    for (int c = 0; c < grid.n_modes(); ++c) {
        int m = c - grid.mode_max;
        for (int q = 0; q < nt; ++q) {
            double ang = kTwoPi * m * q / nt;
            Cpx ph(std::cos(ang), std::sin(ang));
            for (int j = 0; j < grid.n_y; ++j) out(j, q) += modes(j, c) * ph;
        }
    }
    return out;
}

Cpx DiscreteFunction::inner(const DiscreteFunction& other) const {
    auto w = grid.weights();
    Cpx acc(0.0, 0.0);
    for (int j = 0; j < grid.n_y; ++j) {
        Cpx row(0.0, 0.0);
        for (int c = 0; c < grid.n_modes(); ++c)
            row += modes(j, c) * std::conj(other.modes(j, c));
        acc += row * w[j];
    }
    return acc;
}

double DiscreteFunction::norm() const { return std::sqrt(std::abs(inner(*this))); }

bool OperatorMatrix::has_block(int n, int m) const {
    return blocks.count({n, m}) > 0;
}

const Eigen::MatrixXcd* OperatorMatrix::block(int n, int m) const {
    auto it = blocks.find({n, m});
    return it == blocks.end() ? nullptr : &it->second;
}

Eigen::MatrixXcd& OperatorMatrix::block_ref(int n, int m) {
    auto it = blocks.find({n, m});
    if (it != blocks.end()) return it->second;
    auto& b = blocks[{n, m}];
    b = Eigen::MatrixXcd::Zero(grid.n_y, grid.n_y);
    return b;
}

bool OperatorMatrix::block_diagonal() const {
    for (const auto& [key, b] : blocks)
        if (key.first != key.second && b.cwiseAbs().maxCoeff() > 0.0) return false;
    return true;
}

DiscreteFunction OperatorMatrix::apply(const DiscreteFunction& f) const {
    DiscreteFunction out = DiscreteFunction::zero(grid);
    for (const auto& [key, b] : blocks) {
        auto [n, m] = key;
        out.modes.col(n + grid.mode_max) += b * f.modes.col(m + grid.mode_max);
    }
    return out;
}

Eigen::MatrixXcd OperatorMatrix::to_dense() const {
    const int ny = grid.n_y;
    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(grid.dim(), grid.dim());
    for (const auto& [key, b] : blocks) {
        auto [n, m] = key;
        d.block((n + grid.mode_max) * ny, (m + grid.mode_max) * ny, ny, ny) = b;
    }
    return d;
}

OperatorMatrix OperatorMatrix::identity(const GridSpec& g, double h) {
    OperatorMatrix m;
    m.grid = g;
    m.h = h;
    for (int n = -g.mode_max; n <= g.mode_max; ++n)
        m.blocks[{n, n}] = Eigen::MatrixXcd::Identity(g.n_y, g.n_y);
    return m;
}

OperatorMatrix OperatorMatrix::mul(const OperatorMatrix& other) const {
    OperatorMatrix out;
    out.grid = grid;
    out.h = h;
    out.t = t;
    for (const auto& [ka, a] : blocks) {
        for (const auto& [kb, b] : other.blocks) {
            if (ka.second != kb.first) continue;
            auto key = std::make_pair(ka.first, kb.second);
            auto it = out.blocks.find(key);
            if (it == out.blocks.end())
                out.blocks[key] = a * b;
            else
                it->second += a * b;
        }
    }
    return out;
}

OperatorMatrix OperatorMatrix::add(const OperatorMatrix& other, Cpx ca, Cpx cb) const {
    OperatorMatrix out;
    out.grid = grid;
    out.h = h;
    out.t = t;
    for (const auto& [k, a] : blocks) out.blocks[k] = ca * a;
    for (const auto& [k, b] : other.blocks) {
        auto it = out.blocks.find(k);
        if (it == out.blocks.end())
            out.blocks[k] = cb * b;
        else
            it->second += cb * b;
    }
    return out;
}

OperatorMatrix OperatorMatrix::scale(Cpx c) const {
    OperatorMatrix out = *this;
    for (auto& [k, b] : out.blocks) b *= c;
    return out;
}

OperatorMatrix OperatorMatrix::adjoint() const {
    // A^dag = W^{-1} A^H W with W = diag(w_j) per mode
    auto w = grid.weights();
    OperatorMatrix out;
    out.grid = grid;
    out.h = h;
    out.t = t;
    for (const auto& [k, b] : blocks) {
        Eigen::MatrixXcd bt = b.adjoint();
        for (int i = 0; i < grid.n_y; ++i)
            for (int j = 0; j < grid.n_y; ++j) bt(i, j) *= w[j] / w[i];
        out.blocks[{k.second, k.first}] = std::move(bt);
    }
    return out;
}

namespace {

Eigen::MatrixXcd symmetrize(const Eigen::MatrixXcd& b, const std::vector<double>& w) {
    Eigen::MatrixXcd s = b;
    const int n = static_cast<int>(w.size());
    for (int i = 0; i < n; ++i) {
        double si = std::sqrt(w[i]);
        for (int j = 0; j < n; ++j) s(i, j) = si * b(i, j) / std::sqrt(w[j]);
    }
    return s;
}

double top_singular(const Eigen::MatrixXcd& m) {
    Eigen::MatrixXcd g = m.adjoint() * m;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(g, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

}  // namespace

double OperatorMatrix::op_norm() const {
    if (blocks.empty()) return 0.0;
    auto w = grid.weights();
    if (block_diagonal()) {
        double best = 0.0;
        for (const auto& [k, b] : blocks)
            if (k.first == k.second) best = std::max(best, top_singular(symmetrize(b, w)));
        return best;
    }
    const int ny = grid.n_y;
    Eigen::MatrixXcd d = to_dense();
    for (int bi = 0; bi < grid.n_modes(); ++bi)
        for (int i = 0; i < ny; ++i) {
            double si = std::sqrt(w[i]);
            for (int bj = 0; bj < grid.n_modes(); ++bj)
                for (int j = 0; j < ny; ++j)
                    d(bi * ny + i, bj * ny + j) *= si / std::sqrt(w[j]);
        }
    return top_singular(d);
}

double OperatorMatrix::frobenius() const {
    auto w = grid.weights();
    double acc = 0.0;
    for (const auto& [k, b] : blocks) {
        for (int i = 0; i < grid.n_y; ++i)
            for (int j = 0; j < grid.n_y; ++j)
                acc += (w[i] / w[j]) * std::norm(b(i, j));
    }
    return std::sqrt(acc);
}

Cpx OperatorMatrix::trace() const {
    Cpx acc(0.0, 0.0);
    for (const auto& [k, b] : blocks)
        if (k.first == k.second) acc += b.trace();
    return acc;
}

double OperatorMatrix::trace_real() const { return trace().real(); }

void write_matrix_binary(const Eigen::MatrixXcd& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_matrix_binary: cannot open " + path);
    const char magic[8] = {'C', 'U', 'S', 'P', 'M', 'L', '0', '1'};
    out.write(magic, 8);
    int64_t rows = m.rows(), cols = m.cols();
    out.write(reinterpret_cast<const char*>(&rows), 8);
    out.write(reinterpret_cast<const char*>(&cols), 8);
    for (int64_t i = 0; i < rows; ++i)
        for (int64_t j = 0; j < cols; ++j) {
            double re = m(i, j).real(), im = m(i, j).imag();
            out.write(reinterpret_cast<const char*>(&re), 8);
            out.write(reinterpret_cast<const char*>(&im), 8);
        }
}

Eigen::MatrixXcd read_matrix_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_matrix_binary: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (std::memcmp(magic, "CUSPML01", 8) != 0)
        throw std::runtime_error("read_matrix_binary: bad magic");
    int64_t rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&rows), 8);
    in.read(reinterpret_cast<char*>(&cols), 8);
    Eigen::MatrixXcd m(rows, cols);
    for (int64_t i = 0; i < rows; ++i)
        for (int64_t j = 0; j < cols; ++j) {
            double re, im;
            in.read(reinterpret_cast<char*>(&re), 8);
            in.read(reinterpret_cast<char*>(&im), 8);
            m(i, j) = Cpx(re, im);
        }
    return m;
}

void write_sidecar(const GridSpec& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_sidecar: cannot open " + path);
    out << g.to_json().dump(2) << "\n";
}

}  // namespace cuspml
