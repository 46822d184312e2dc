#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "covest/error.hpp"

namespace covest {

/// Dense row-major matrix. Small dimensions only; no view semantics.
class Matrix {
public:
    Matrix() : rows_(0), cols_(0) {}
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    Matrix(std::initializer_list<std::initializer_list<double>> init) {
        rows_ = init.size();
        cols_ = rows_ ? init.begin()->size() : 0;
        data_.reserve(rows_ * cols_);
        for (const auto& row : init) {
            if (row.size() != cols_)
                throw invalid_input_error("Matrix: ragged initializer list");
            data_.insert(data_.end(), row.begin(), row.end());
        }
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    Matrix transposed() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    Matrix operator*(const Matrix& rhs) const {
        if (cols_ != rhs.rows_)
            throw dimension_mismatch_error("Matrix multiply: inner dimensions disagree");
        Matrix out(rows_, rhs.cols_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t k = 0; k < cols_; ++k) {
                const double a = (*this)(i, k);
                if (a == 0.0) continue;
                for (std::size_t j = 0; j < rhs.cols_; ++j) out(i, j) += a * rhs(k, j);
            }
        return out;
    }

    bool all_finite() const noexcept {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

private:
    std::size_t rows_, cols_;
    std::vector<double> data_;
};

/// Symmetric d x d matrix. Only the lower triangle is stored, so
/// entries(i, j) == entries(j, i) holds exactly by construction.
class SymMatrix {
public:
    explicit SymMatrix(std::size_t dim) : dim_(dim), tri_(dim * (dim + 1) / 2, 0.0) {
        if (dim == 0) throw invalid_input_error("SymMatrix: dimension must be >= 1");
    }

    /// Builds from a full square grid; off-diagonal pairs must agree exactly.
    SymMatrix(std::initializer_list<std::initializer_list<double>> init)
        : SymMatrix(Matrix(init)) {}

    explicit SymMatrix(const Matrix& full) : SymMatrix(full.rows()) {
        if (full.rows() != full.cols())
            throw invalid_input_error("SymMatrix: input is not square");
        for (std::size_t i = 0; i < dim_; ++i)
            for (std::size_t j = 0; j <= i; ++j) {
                if (full(i, j) != full(j, i))
                    throw invalid_input_error("SymMatrix: input is not symmetric");
                tri_[idx(i, j)] = full(i, j);
            }
    }

    static SymMatrix diagonal(const std::vector<double>& d) {
        SymMatrix m(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m.set(i, i, d[i]);
        return m;
    }

    static SymMatrix zero(std::size_t dim) { return SymMatrix(dim); }

    static SymMatrix identity(std::size_t dim) {
        SymMatrix m(dim);
        for (std::size_t i = 0; i < dim; ++i) m.set(i, i, 1.0);
        return m;
    }

    /// Rank-one matrix x * x^T.
    static SymMatrix outer(const std::vector<double>& x) {
        SymMatrix m(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            for (std::size_t j = 0; j <= i; ++j) m.set(i, j, x[i] * x[j]);
        return m;
    }

    std::size_t dim() const noexcept { return dim_; }

    double operator()(std::size_t i, std::size_t j) const {
        return tri_[i >= j ? idx(i, j) : idx(j, i)];
    }

    /// Writes both (i, j) and (j, i); they share storage.
    void set(std::size_t i, std::size_t j, double v) {
        tri_[i >= j ? idx(i, j) : idx(j, i)] = v;
    }

    void add_scaled(const SymMatrix& other, double factor) {
        require_same_dim(other);
        for (std::size_t k = 0; k < tri_.size(); ++k) tri_[k] += factor * other.tri_[k];
    }

    void scale(double factor) {
        for (double& v : tri_) v *= factor;
    }

    /// Accumulates factor * x * x^T without materializing the outer product.
    void add_outer(const double* x, double factor) {
        for (std::size_t i = 0; i < dim_; ++i)
            for (std::size_t j = 0; j <= i; ++j) tri_[idx(i, j)] += factor * x[i] * x[j];
    }

    SymMatrix operator-(const SymMatrix& other) const {
        require_same_dim(other);
        SymMatrix out(dim_);
        for (std::size_t k = 0; k < tri_.size(); ++k) out.tri_[k] = tri_[k] - other.tri_[k];
        return out;
    }

    SymMatrix operator+(const SymMatrix& other) const {
        require_same_dim(other);
        SymMatrix out(dim_);
        for (std::size_t k = 0; k < tri_.size(); ++k) out.tri_[k] = tri_[k] + other.tri_[k];
        return out;
    }

    bool operator==(const SymMatrix& other) const {
        return dim_ == other.dim_ && tri_ == other.tri_;
    }

    Matrix dense() const {
        Matrix m(dim_, dim_);
        for (std::size_t i = 0; i < dim_; ++i)
            for (std::size_t j = 0; j < dim_; ++j) m(i, j) = (*this)(i, j);
        return m;
    }

    double frobenius_norm() const {
        double sum = 0.0;
        for (std::size_t i = 0; i < dim_; ++i)
            for (std::size_t j = 0; j < dim_; ++j) {
                const double v = (*this)(i, j);
                sum += v * v;
            }
        return std::sqrt(sum);
    }

    /// v^T A u in a fixed accumulation order (rows outer, columns inner).
    double bilinear(const std::vector<double>& v, const std::vector<double>& u) const {
        if (v.size() != dim_ || u.size() != dim_)
            throw dimension_mismatch_error("bilinear: vector length does not match matrix");
        double acc = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < dim_; ++j) row += (*this)(i, j) * u[j];
            acc += v[i] * row;
        }
        return acc;
    }

    bool all_finite() const noexcept {
        for (double v : tri_)
            if (!std::isfinite(v)) return false;
        return true;
    }

private:
    static std::size_t idx(std::size_t i, std::size_t j) { return i * (i + 1) / 2 + j; }

    void require_same_dim(const SymMatrix& other) const {
        if (dim_ != other.dim_)
            throw dimension_mismatch_error("SymMatrix: dimensions disagree");
    }

    std::size_t dim_;
    std::vector<double> tri_;
};

/// Sum of diagonal entries, accumulated in index order.
inline double trace(const SymMatrix& a) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) sum += a(i, i);
    return sum;
}

/// Eigendecomposition of a symmetric matrix: values sorted descending,
/// vectors stored as the columns of an orthonormal matrix.
struct EigenSystem {
    std::vector<double> values;
    Matrix vectors;

    std::vector<double> vector(std::size_t k) const {
        std::vector<double> v(vectors.rows());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = vectors(i, k);
        return v;
    }
};

namespace detail {

inline constexpr int kJacobiMaxSweeps = 100;
inline constexpr double kJacobiTol = 1e-12;

inline double max_offdiag(const Matrix& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j)));
    return m;
}

} // namespace detail

/// Cyclic Jacobi eigensolver. Sweeps until the largest off-diagonal entry
/// drops below 1e-12 * ||A||_F, capped at 100 sweeps.
inline EigenSystem eigensystem(const SymMatrix& input) {
    if (!input.all_finite())
        throw invalid_input_error("eigensystem: matrix has non-finite entries");
    const std::size_t n = input.dim();
    Matrix a = input.dense();
    Matrix v = Matrix::identity(n);

    const double fro = input.frobenius_norm();
    const double threshold = detail::kJacobiTol * fro;

    int sweeps = 0;
    while (detail::max_offdiag(a) > threshold) {
        if (sweeps++ >= detail::kJacobiMaxSweeps)
            throw convergence_error("eigensystem: Jacobi sweep cap exceeded",
                                    detail::max_offdiag(a));
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= threshold) continue;
                const double app = a(p, p);
                const double aqq = a(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

    EigenSystem out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
    }
    return out;
}

/// Largest absolute eigenvalue.
inline double operator_norm(const SymMatrix& a) {
    if (!a.all_finite())
        throw invalid_input_error("operator_norm: matrix has non-finite entries");
    const EigenSystem es = eigensystem(a);
    double m = 0.0;
    for (double lam : es.values) m = std::max(m, std::abs(lam));
    return m;
}

/// General matrices go through sqrt(lambda_max(A^T A)).
inline double operator_norm(const Matrix& a) {
    if (!a.all_finite())
        throw invalid_input_error("operator_norm: matrix has non-finite entries");
    if (a.rows() != a.cols())
        throw invalid_input_error("operator_norm: matrix must be square");
    const std::size_t n = a.rows();
    SymMatrix ata(n == 0 ? 1 : n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            double sum = 0.0;
            for (std::size_t k = 0; k < n; ++k) sum += a(k, i) * a(k, j);
            ata.set(i, j, sum);
        }
    const EigenSystem es = eigensystem(ata);
    double lam_max = 0.0;
    for (double lam : es.values) lam_max = std::max(lam_max, lam);
    return std::sqrt(std::max(0.0, lam_max));
}

/// Positive semidefinite matrix. Construction checks that every eigenvalue
/// is >= -1e-10 * trace.
class CovarianceMatrix {
public:
    explicit CovarianceMatrix(SymMatrix m) : mat_(std::move(m)) {
        const double tol = kPsdTolFactor * trace(mat_);
        const EigenSystem es = eigensystem(mat_);
        for (double lam : es.values)
            if (lam < -tol)
                throw not_psd_error("CovarianceMatrix: eigenvalue " + std::to_string(lam) +
                                    " below PSD tolerance " + std::to_string(-tol));
    }

    CovarianceMatrix(std::initializer_list<std::initializer_list<double>> init)
        : CovarianceMatrix(SymMatrix(init)) {}

    static CovarianceMatrix diagonal(const std::vector<double>& d) {
        return CovarianceMatrix(SymMatrix::diagonal(d));
    }

    static CovarianceMatrix identity(std::size_t dim) {
        return CovarianceMatrix(SymMatrix::identity(dim));
    }

    const SymMatrix& sym() const noexcept { return mat_; }
    std::size_t dim() const noexcept { return mat_.dim(); }
    double operator()(std::size_t i, std::size_t j) const { return mat_(i, j); }

    static constexpr double kPsdTolFactor = 1e-10;

private:
    SymMatrix mat_;
};

inline double trace(const CovarianceMatrix& a) { return trace(a.sym()); }

inline double operator_norm(const CovarianceMatrix& a) { return operator_norm(a.sym()); }

/// Tr(A) / ||A||; lies in [1, d] for any nonzero PSD matrix.
inline double effective_rank(const CovarianceMatrix& a) {
    const double nrm = operator_norm(a);
    if (nrm == 0.0)
        throw degenerate_input_error("effective_rank: zero matrix");
    return trace(a) / nrm;
}

/// Lower-triangular Cholesky factor of A + ridge * I, with
/// ridge = 1e-12 * trace(A) / d. Zero pivots produce zero columns, so
/// PSD-singular inputs (including the zero matrix) factor cleanly.
inline Matrix cholesky(const CovarianceMatrix& a) {
    const std::size_t n = a.dim();
    const double ridge = 1e-12 * trace(a) / static_cast<double>(n);
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double diag = a(j, j) + ridge;
        for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
        if (diag < 0.0)
            throw not_psd_error("cholesky: negative pivot " + std::to_string(diag) +
                                " at index " + std::to_string(j));
        const double ljj = std::sqrt(diag);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            if (ljj == 0.0) {
                l(i, j) = 0.0;
                continue;
            }
            double sum = a(i, j);
            for (std::size_t k = 0; k < j; ++k) sum -= l(i, k) * l(j, k);
            l(i, j) = sum / ljj;
        }
    }
    return l;
}

} // namespace covest
