#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "halting/ensembles.hpp"

namespace halting::cg {

struct CgConfig {
    double eps = 1e-10;
    int max_iter = 1;
    bool keep_history = false;

    void validate() const {
        if (!(eps > 0.0)) throw std::invalid_argument("CgConfig: eps must be positive");
        if (max_iter < 1) throw std::invalid_argument("CgConfig: max_iter must be >= 1");
    }
};

// Default iteration cap: well above the M = N heavy tail without letting
// pathological trials run forever.
inline int default_max_iter(int n) { return 10 * n; }

enum class CgFlag { None, NonFinite, IndefiniteBreakdown };

struct CgResult {
    int halting_time = 0;
    double recursive_residual_norm = 0.0;
    double true_residual_norm = 0.0;
    bool converged = false;
    CgFlag flag = CgFlag::None;
    std::vector<double> residual_history;  // kept only on request
    std::variant<Eigen::VectorXd, Eigen::VectorXcd> solution;
    // kept only on request, for the small-instance error diagnostics
    std::vector<std::variant<Eigen::VectorXd, Eigen::VectorXcd>> iterate_history;

    const Eigen::VectorXd& solution_real() const { return std::get<0>(solution); }
    const Eigen::VectorXcd& solution_cplx() const { return std::get<1>(solution); }
};

namespace detail {

template <typename Scalar>
CgResult run(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& a,
             const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& b, const CgConfig& cfg) {
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    cfg.validate();
    if (a.rows() != a.cols() || a.rows() != b.size())
        throw std::invalid_argument("cg_halting_time: dimension mismatch");

    CgResult res;
    Vec x = b;  // x0 = b
    Vec r = b - a * x;
    Vec p = r;
    double rr = std::real(Scalar(r.dot(r)));  // <r,r>, conjugate-linear first arg
    double rnorm = std::sqrt(rr);
    if (cfg.keep_history) {
        res.residual_history.push_back(rnorm);
        res.iterate_history.emplace_back(x);
    }

    int k = 0;
    while (rnorm >= cfg.eps && k < cfg.max_iter) {
        const Vec ap = a * p;
        const double pap = std::real(Scalar(p.dot(ap)));
        if (!std::isfinite(pap) || pap <= 0.0) {
            res.flag = std::isfinite(pap) ? CgFlag::IndefiniteBreakdown : CgFlag::NonFinite;
            break;
        }
        const double alpha = rr / pap;
        r -= alpha * ap;
        x += alpha * p;
        const double rr_new = std::real(Scalar(r.dot(r)));
        if (!std::isfinite(rr_new)) {
            res.flag = CgFlag::NonFinite;
            break;
        }
        p = r + (rr_new / rr) * p;
        rr = rr_new;
        rnorm = std::sqrt(rr);
        ++k;
        if (cfg.keep_history) {
            res.residual_history.push_back(rnorm);
            res.iterate_history.emplace_back(x);
        }
    }

    res.halting_time = k;
    res.recursive_residual_norm = rnorm;
    res.true_residual_norm = (b - a * x).norm();
    res.converged = res.flag == CgFlag::None && rnorm < cfg.eps;
    res.solution = std::move(x);
    return res;
}

}  // namespace detail

// CG via the three-step residual recurrence, halting at the first k with
// ||r_k|| < eps (recursive residual, not the true one). The count may
// exceed n in finite precision; no clamping.
inline CgResult cg_halting_time(const ensembles::ScalarOrComplexMatrix& a,
                                const Eigen::VectorXd& b, const CgConfig& cfg) {
    if (a.is_complex())
        return detail::run<std::complex<double>>(a.cplx(), b.cast<std::complex<double>>(), cfg);
    return detail::run<double>(a.real(), b, cfg);
}

inline CgResult cg_halting_time(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                const CgConfig& cfg) {
    return detail::run<double>(a, b, cfg);
}

// Dense-factorization solve, for test use on small instances.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> direct_solve_oracle(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& a,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& b) {
    if (a.rows() > 64)
        throw std::invalid_argument("direct_solve_oracle: limited to n <= 64");
    Eigen::LLT<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> llt(a);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("direct_solve_oracle: matrix not positive definite to working precision");
    return llt.solve(b);
}

}  // namespace halting::cg
