#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace spectra {

struct CgResult {
    std::vector<double> x;
    std::size_t iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

/// Unpreconditioned conjugate gradient for a symmetric positive definite
/// operator, starting from x = 0. Stops once |r| / |b| < tol.
template <typename Apply>
CgResult conjugate_gradient(Apply&& apply, std::span<const double> rhs, double tol,
                            std::size_t max_iters)
{
    const std::size_t n = rhs.size();
    auto dot = [n](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            s += a[i] * b[i];
        return s;
    };

    CgResult res;
    res.x.assign(n, 0.0);
    std::vector<double> r(rhs.begin(), rhs.end());
    const double norm_b = std::sqrt(dot(r, r));
    if (norm_b == 0.0) {
        res.converged = true;
        return res;
    }

    std::vector<double> p = r;
    double rr = dot(r, r);
    for (std::size_t it = 0; it < max_iters; ++it) {
        const std::vector<double> ap = apply(std::span<const double>(p));
        const double pap = dot(p, ap);
        if (!(pap > 0.0)) {
            // Operator is not positive definite along p.
            res.iterations = it;
            res.relative_residual = std::sqrt(rr) / norm_b;
            return res;
        }
        const double alpha = rr / pap;
        for (std::size_t i = 0; i < n; ++i) {
            res.x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        const double rr_next = dot(r, r);
        res.iterations = it + 1;
        res.relative_residual = std::sqrt(rr_next) / norm_b;
        if (res.relative_residual < tol) {
            res.converged = true;
            return res;
        }
        const double beta = rr_next / rr;
        for (std::size_t i = 0; i < n; ++i)
            p[i] = r[i] + beta * p[i];
        rr = rr_next;
    }
    return res;
}

} // namespace spectra
