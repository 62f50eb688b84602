#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "halting/rng.hpp"

namespace halting::ensembles {

enum class MatrixKind { PBE, LOE, LUE };

// Wishart-type spec: A = X X* with X of shape n x m, entries iid from the
// kind's law. m >= n keeps A away from the singular regime.
struct MatrixEnsemble {
    MatrixKind kind;
    int n;
    int m;

    MatrixEnsemble(MatrixKind k, int n_, int m_) : kind(k), n(n_), m(m_) {
        if (n < 1 || m < 1)
            throw std::invalid_argument("MatrixEnsemble: dimensions must be positive");
        if (m < n)
            throw std::invalid_argument("MatrixEnsemble: requires m >= n");
    }
};

enum class CouplingKind { Gaussian, Bernoulli, Uniform };

struct CouplingEnsemble {
    CouplingKind kind;
    int n;

    CouplingEnsemble(CouplingKind k, int n_) : kind(k), n(n_) {
        if (n < 2) throw std::invalid_argument("CouplingEnsemble: n must be >= 2");
    }
};

// Order-3 coupling array, n^3 entries, row-major in (i,j,k).
struct CouplingTensor {
    int n = 0;
    std::vector<double> entries;

    double at(int i, int j, int k) const {
        return entries[(static_cast<std::size_t>(i) * n + j) * n + k];
    }
    double& at(int i, int j, int k) {
        return entries[(static_cast<std::size_t>(i) * n + j) * n + k];
    }
};

// A Hermitian positive semidefinite matrix over either the real or the
// complex field.
struct ScalarOrComplexMatrix {
    std::variant<Eigen::MatrixXd, Eigen::MatrixXcd> m;

    bool is_complex() const { return m.index() == 1; }
    int n() const {
        return is_complex() ? static_cast<int>(std::get<1>(m).rows())
                            : static_cast<int>(std::get<0>(m).rows());
    }
    const Eigen::MatrixXd& real() const { return std::get<0>(m); }
    const Eigen::MatrixXcd& cplx() const { return std::get<1>(m); }
};

// Right-hand side: each entry iid uniform on (-1,1), strictly inside.
inline Eigen::VectorXd sample_rhs(int n, RandomStream& rng) {
    if (n < 1) throw std::invalid_argument("sample_rhs: n must be positive");
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) b[i] = rng.uniform_open(-1.0, 1.0);
    return b;
}

inline ScalarOrComplexMatrix sample_wishart(const MatrixEnsemble& spec,
                                            RandomStream& rng) {
    const int n = spec.n, m = spec.m;
    if (spec.kind == MatrixKind::LUE) {
        // Standard complex normal: real and imaginary parts each N(0, 1/2).
        const double s = std::sqrt(0.5);
        Eigen::MatrixXcd x(n, m);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j)
                x(i, j) = std::complex<double>(s * rng.normal(), s * rng.normal());
        Eigen::MatrixXcd a = x * x.adjoint();
        // Symmetrize away the last bits of rounding asymmetry.
        a = 0.5 * (a + a.adjoint()).eval();
        return {std::move(a)};
    }
    Eigen::MatrixXd x(n, m);
    if (spec.kind == MatrixKind::LOE) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) x(i, j) = rng.normal();
    } else {  // PBE
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) x(i, j) = rng.sign();
    }
    Eigen::MatrixXd a = x * x.transpose();
    a = 0.5 * (a + a.transpose()).eval();
    return {std::move(a)};
}

inline constexpr int kMaxCouplingDim = 512;

inline CouplingTensor sample_coupling_tensor(const CouplingEnsemble& spec,
                                             RandomStream& rng) {
    if (spec.n > kMaxCouplingDim)
        throw std::invalid_argument("sample_coupling_tensor: n exceeds the 512 cap");
    const std::size_t count = static_cast<std::size_t>(spec.n) * spec.n * spec.n;
    CouplingTensor t;
    t.n = spec.n;
    t.entries.resize(count);
    switch (spec.kind) {
        case CouplingKind::Gaussian:
            for (auto& e : t.entries) e = rng.normal();
            break;
        case CouplingKind::Bernoulli: {
            const double v = 1.0 / std::sqrt(2.0);
            for (auto& e : t.entries) e = v * rng.sign();
            break;
        }
        case CouplingKind::Uniform: {
            const double a = std::cbrt(1.5);
            for (auto& e : t.entries) e = rng.uniform_open(-a, a);
            break;
        }
    }
    return t;
}

// Uniform point on the sphere of radius sqrt(n).
inline Eigen::VectorXd sample_sphere_point(int n, RandomStream& rng) {
    if (n < 1) throw std::invalid_argument("sample_sphere_point: n must be positive");
    Eigen::VectorXd w(n);
    double norm2;
    do {
        for (int i = 0; i < n; ++i) w[i] = rng.normal();
        norm2 = w.squaredNorm();
    } while (norm2 < 1e-200);
    w *= std::sqrt(static_cast<double>(n) / norm2);
    return w;
}

}  // namespace halting::ensembles
