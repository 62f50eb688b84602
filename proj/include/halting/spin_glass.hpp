#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "halting/ensembles.hpp"

namespace halting::spin_glass {

using ensembles::CouplingTensor;

// Which gradient norm the stopping rule tests. On the sphere the ambient
// gradient tends to 3|H|/sqrt(N) (normal component) rather than zero, so
// Tangential is the default; Ambient stays available as a switch.
enum class StopNorm { Tangential, Ambient };

struct SpinGlassConfig {
    double eta = 0.01;
    double eps = 1.0;
    int max_iter = 10000;
    StopNorm stop_norm = StopNorm::Tangential;

    void validate() const {
        if (!(eta > 0.0)) throw std::invalid_argument("SpinGlassConfig: eta must be positive");
        if (!(eps > 0.0)) throw std::invalid_argument("SpinGlassConfig: eps must be positive");
        if (max_iter < 1) throw std::invalid_argument("SpinGlassConfig: max_iter must be >= 1");
    }
};

enum class SpinGlassFlag { None, NonFinite };

struct SpinGlassResult {
    int halting_time = 0;
    double final_energy = 0.0;
    double final_energy_per_spin = 0.0;
    double final_gradient_norm = 0.0;
    bool converged = false;
    SpinGlassFlag flag = SpinGlassFlag::None;
};

namespace detail {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// B_ij = sum_k x_ijk w_k, one pass over the tensor.
inline RowMat contract_last(const CouplingTensor& x, const Eigen::VectorXd& w) {
    const int n = x.n;
    Eigen::Map<const RowMat> flat(x.entries.data(),
                                  static_cast<Eigen::Index>(n) * n, n);
    Eigen::VectorXd v = flat * w;  // length n^2, (i,j) row-major
    return Eigen::Map<RowMat>(v.data(), n, n);
}

// D_jl = sum_i x_ijl w_i, one pass over the tensor.
inline RowMat contract_first(const CouplingTensor& x, const Eigen::VectorXd& w) {
    const int n = x.n;
    Eigen::Map<const RowMat> flat(x.entries.data(), n,
                                  static_cast<Eigen::Index>(n) * n);
    Eigen::VectorXd v = flat.transpose() * w;  // length n^2, (j,l) row-major
    return Eigen::Map<RowMat>(v.data(), n, n);
}

}  // namespace detail

// H_N(w) = (1/N) sum_{i,j,k} x_ijk w_i w_j w_k over all ordered triples.
inline double hamiltonian(const CouplingTensor& x, const Eigen::VectorXd& w) {
    if (w.size() != x.n) throw std::invalid_argument("hamiltonian: dimension mismatch");
    const detail::RowMat b = detail::contract_last(x, w);
    return w.dot(b * w) / static_cast<double>(x.n);
}

// Exact Euclidean gradient of the unsymmetrized triple sum: component l is
// (1/N) [sum_jk x_ljk w_j w_k + sum_ik x_ilk w_i w_k + sum_ij x_ijl w_i w_j].
inline Eigen::VectorXd gradient(const CouplingTensor& x, const Eigen::VectorXd& w) {
    if (w.size() != x.n) throw std::invalid_argument("gradient: dimension mismatch");
    const detail::RowMat b = detail::contract_last(x, w);   // B_ij = sum_k x_ijk w_k
    const detail::RowMat d = detail::contract_first(x, w);  // D_jl = sum_i x_ijl w_i
    Eigen::VectorXd g = b * w;              // sum_jk x_ljk w_j w_k
    g += b.transpose() * w;                 // sum_ik x_ilk w_i w_k
    g += d.transpose() * w;                 // sum_ij x_ijl w_i w_j
    return g / static_cast<double>(x.n);
}

// Projected gradient descent: Euclidean step, rescale to the sphere of
// radius sqrt(N), stop when the configured gradient norm drops below eps.
inline SpinGlassResult gradient_descent_halting(const CouplingTensor& x,
                                                const Eigen::VectorXd& w0,
                                                const SpinGlassConfig& cfg) {
    cfg.validate();
    const int n = x.n;
    if (w0.size() != n)
        throw std::invalid_argument("gradient_descent_halting: dimension mismatch");
    const double radius = std::sqrt(static_cast<double>(n));
    if (std::abs(w0.norm() - radius) > 1e-10 * radius)
        throw std::invalid_argument("gradient_descent_halting: w0 must lie on the sphere of radius sqrt(N)");

    SpinGlassResult res;
    Eigen::VectorXd w = w0;
    Eigen::VectorXd g = gradient(x, w);

    auto stop_norm = [&](const Eigen::VectorXd& grad, const Eigen::VectorXd& point) {
        if (cfg.stop_norm == StopNorm::Ambient) return grad.norm();
        const double radial = grad.dot(point) / static_cast<double>(n);
        return (grad - radial * point).norm();
    };

    int t = 0;
    double gnorm = stop_norm(g, w);
    while (gnorm >= cfg.eps && t < cfg.max_iter) {
        w -= cfg.eta * g;
        const double norm = w.norm();
        if (!std::isfinite(norm) || norm < 1e-200) {
            res.flag = SpinGlassFlag::NonFinite;
            break;
        }
        w *= radius / norm;
        g = gradient(x, w);
        gnorm = stop_norm(g, w);
        if (!std::isfinite(gnorm)) {
            res.flag = SpinGlassFlag::NonFinite;
            break;
        }
        ++t;
    }

    res.halting_time = t;
    res.final_energy = hamiltonian(x, w);
    res.final_energy_per_spin = res.final_energy / static_cast<double>(n);
    res.final_gradient_norm = gnorm;
    res.converged = res.flag == SpinGlassFlag::None && gnorm < cfg.eps;
    return res;
}

}  // namespace halting::spin_glass
