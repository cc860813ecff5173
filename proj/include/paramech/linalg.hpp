#pragma once

#include <cstddef>
#include <vector>

namespace paramech {

// Dense row-major real matrix, just big enough for the saddle-point and
// multiplier systems (dimensions stay in the tens).
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

// Solves A x = b by LU with partial pivoting. Returns false when a pivot
// falls below `tol` times the largest entry of A (singular to tolerance).
bool lu_solve(Matrix a, std::vector<double> b, std::vector<double>& x,
              double tol = 1e-12);

// Singular values by one-sided Jacobi, descending.
std::vector<double> singular_values(const Matrix& a);

std::size_t numeric_rank(const Matrix& a, double tol);

// Minimum-norm least-squares solution via the Jacobi SVD. On return
// `residual` holds |A x - b| (Euclidean).
std::vector<double> least_squares_min_norm(const Matrix& a, const std::vector<double>& b,
                                           double rank_tol, double& residual);

} // namespace paramech
