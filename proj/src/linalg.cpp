#include "paramech/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace paramech {

bool lu_solve(Matrix a, std::vector<double> b, std::vector<double>& x, double tol) {
    const std::size_t n = a.rows();
    double scale = 0.0;
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) scale = std::max(scale, std::fabs(a(r, c)));
    const double pivot_floor = tol * std::max(scale, 1.0);

    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t r = k + 1; r < n; ++r) {
            if (std::fabs(a(r, k)) > std::fabs(a(p, k))) p = r;
        }
        if (std::fabs(a(p, k)) <= pivot_floor) return false;
        if (p != k) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a(p, c), a(k, c));
            std::swap(b[p], b[k]);
        }
        for (std::size_t r = k + 1; r < n; ++r) {
            const double f = a(r, k) / a(k, k);
            a(r, k) = 0.0;
            for (std::size_t c = k + 1; c < n; ++c) a(r, c) -= f * a(k, c);
            b[r] -= f * b[k];
        }
    }
    x.assign(n, 0.0);
    for (std::size_t k = n; k-- > 0;) {
        double s = b[k];
        for (std::size_t c = k + 1; c < n; ++c) s -= a(k, c) * x[c];
        x[k] = s / a(k, k);
    }
    return true;
}

namespace {

// One-sided Jacobi on the columns of A (rows >= cols arranged by the
// callers below): returns U (rows x cols, orthonormal columns scaled by
// sigma), V (cols x cols) and sigma.
void jacobi_svd(Matrix a, Matrix& u, Matrix& v, std::vector<double>& sigma) {
    const std::size_t m = a.rows(), n = a.cols();
    v = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

    const double eps = 1e-15;
    for (int sweep = 0; sweep < 60; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (std::size_t r = 0; r < m; ++r) {
                    app += a(r, p) * a(r, p);
                    aqq += a(r, q) * a(r, q);
                    apq += a(r, p) * a(r, q);
                }
                if (std::fabs(apq) <= eps * std::sqrt(app * aqq) + 1e-300) continue;
                rotated = true;
                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t r = 0; r < m; ++r) {
                    const double ap = a(r, p), aq = a(r, q);
                    a(r, p) = c * ap - s * aq;
                    a(r, q) = s * ap + c * aq;
                }
                for (std::size_t r = 0; r < n; ++r) {
                    const double vp = v(r, p), vq = v(r, q);
                    v(r, p) = c * vp - s * vq;
                    v(r, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) break;
    }

    sigma.assign(n, 0.0);
    u = Matrix(m, n);
    for (std::size_t c = 0; c < n; ++c) {
        double norm = 0.0;
        for (std::size_t r = 0; r < m; ++r) norm += a(r, c) * a(r, c);
        norm = std::sqrt(norm);
        sigma[c] = norm;
        if (norm > 0.0) {
            for (std::size_t r = 0; r < m; ++r) u(r, c) = a(r, c) / norm;
        }
    }
}

} // namespace

std::vector<double> singular_values(const Matrix& a) {
    // Work on A or A^T so columns <= rows, singular values are shared.
    Matrix work;
    if (a.rows() >= a.cols()) {
        work = a;
    } else {
        work = Matrix(a.cols(), a.rows());
        for (std::size_t r = 0; r < a.rows(); ++r)
            for (std::size_t c = 0; c < a.cols(); ++c) work(c, r) = a(r, c);
    }
    Matrix u, v;
    std::vector<double> s;
    jacobi_svd(work, u, v, s);
    std::sort(s.begin(), s.end(), std::greater<double>());
    return s;
}

std::size_t numeric_rank(const Matrix& a, double tol) {
    if (a.rows() == 0 || a.cols() == 0) return 0;
    const std::vector<double> s = singular_values(a);
    const double floor = tol * std::max(1.0, s.empty() ? 0.0 : s.front());
    std::size_t rank = 0;
    for (double v : s) {
        if (v > floor) ++rank;
    }
    return rank;
}

std::vector<double> least_squares_min_norm(const Matrix& a, const std::vector<double>& b,
                                           double rank_tol, double& residual) {
    const std::size_t m = a.rows(), n = a.cols();
    // Square up so the one-sided sweep sees columns <= rows.
    Matrix work(std::max(m, n), n);
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) work(r, c) = a(r, c);
    Matrix u, v;
    std::vector<double> s;
    jacobi_svd(work, u, v, s);

    double smax = 0.0;
    for (double sv : s) smax = std::max(smax, sv);
    const double floor = rank_tol * std::max(1.0, smax);

    // x = V diag(1/s) U^T b over the significant singular directions.
    std::vector<double> utb(n, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
        double acc = 0.0;
        for (std::size_t r = 0; r < m; ++r) acc += u(r, c) * b[r];
        utb[c] = acc;
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
        if (s[c] > floor) {
            const double coef = utb[c] / s[c];
            for (std::size_t r = 0; r < n; ++r) x[r] += v(r, c) * coef;
        }
    }
    double res2 = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
        double acc = -b[r];
        for (std::size_t c = 0; c < n; ++c) acc += a(r, c) * x[c];
        res2 += acc * acc;
    }
    residual = std::sqrt(res2);
    return x;
}

} // namespace paramech
