#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "salab/error.hpp"

namespace salab {

using Vector = std::vector<double>;

/// Small dense row-major matrix. Dimensions in this library are tiny (d <= 3
/// in practice) so everything is plain loops in a fixed order.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    Matrix(std::initializer_list<std::initializer_list<double>> init)
        : rows_(init.size()), cols_(init.size() ? init.begin()->size() : 0) {
        data_.reserve(rows_ * cols_);
        for (const auto& row : init) {
            if (row.size() != cols_) {
                throw Error(ErrorKind::DimensionMismatch, "ragged matrix initializer");
            }
            data_.insert(data_.end(), row.begin(), row.end());
        }
    }

    static Matrix identity(std::size_t d) {
        Matrix m(d, d);
        for (std::size_t i = 0; i < d; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix diagonal(std::span<const double> diag) {
        Matrix m(diag.size(), diag.size());
        for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
        return m;
    }

    static Matrix column(std::span<const double> v) {
        Matrix m(v.size(), 1);
        std::copy(v.begin(), v.end(), m.data_.begin());
        return m;
    }

    /// x y^T
    static Matrix outer(std::span<const double> x, std::span<const double> y) {
        Matrix m(x.size(), y.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            for (std::size_t j = 0; j < y.size(); ++j) m(i, j) = x[i] * y[j];
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool square() const noexcept { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) noexcept {
        assert(i < rows_ && j < cols_);
        return data_[i * cols_ + j];
    }
    double operator()(std::size_t i, std::size_t j) const noexcept {
        assert(i < rows_ && j < cols_);
        return data_[i * cols_ + j];
    }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    void fill(double value) { std::fill(data_.begin(), data_.end(), value); }

    Matrix& operator+=(const Matrix& other) {
        require_same_shape(other);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
        return *this;
    }
    Matrix& operator-=(const Matrix& other) {
        require_same_shape(other);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
        return *this;
    }
    Matrix& operator*=(double s) noexcept {
        for (auto& v : data_) v *= s;
        return *this;
    }

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(Matrix a, double s) { return a *= s; }
    friend Matrix operator*(double s, Matrix a) { return a *= s; }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        if (a.cols_ != b.rows_) throw Error(ErrorKind::DimensionMismatch, "matrix product");
        Matrix out(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const double aik = a(i, k);
                for (std::size_t j = 0; j < b.cols_; ++j) out(i, j) += aik * b(k, j);
            }
        return out;
    }

    friend Vector operator*(const Matrix& a, std::span<const double> x) {
        if (a.cols_ != x.size()) throw Error(ErrorKind::DimensionMismatch, "matrix-vector product");
        Vector out(a.rows_, 0.0);
        for (std::size_t i = 0; i < a.rows_; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < a.cols_; ++j) acc += a(i, j) * x[j];
            out[i] = acc;
        }
        return out;
    }

    Matrix transposed() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    bool is_symmetric() const noexcept {
        if (!square()) return false;
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = i + 1; j < cols_; ++j)
                if ((*this)(i, j) != (*this)(j, i)) return false;
        return true;
    }

    bool operator==(const Matrix&) const = default;

private:
    void require_same_shape(const Matrix& other) const {
        if (rows_ != other.rows_ || cols_ != other.cols_) {
            throw Error(ErrorKind::DimensionMismatch, "matrix shapes differ");
        }
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double norm2(std::span<const double> v) noexcept {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

inline double distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error(ErrorKind::DimensionMismatch, "vector sizes differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(acc);
}

/// Eigenvalues of a symmetric matrix in ascending order. d <= 2 in closed
/// form, otherwise cyclic Jacobi rotations.
inline Vector symmetric_eigenvalues(const Matrix& m) {
    if (!m.square()) throw Error(ErrorKind::DimensionMismatch, "eigenvalues of non-square matrix");
    const std::size_t d = m.rows();
    if (d == 0) return {};
    if (d == 1) return {m(0, 0)};
    if (d == 2) {
        const double a = m(0, 0), b = 0.5 * (m(0, 1) + m(1, 0)), c = m(1, 1);
        const double mean = 0.5 * (a + c);
        const double radius = std::hypot(0.5 * (a - c), b);
        return {mean - radius, mean + radius};
    }

    Matrix a = m;
    auto off_diagonal = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                if (i != j) s += a(i, j) * a(i, j);
        return s;
    };
    double scale = 0.0;
    for (double v : a.data()) scale += v * v;
    const double tol = 1e-30 * scale;
    for (int sweep = 0; sweep < 100 && off_diagonal() > tol; ++sweep) {
        for (std::size_t p = 0; p + 1 < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < d; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    Vector eig(d);
    for (std::size_t i = 0; i < d; ++i) eig[i] = a(i, i);
    std::sort(eig.begin(), eig.end());
    return eig;
}

/// Largest singular value, sup_{|x|=1} |Mx|.
inline double operator_norm(const Matrix& m) {
    if (m.rows() == 0 || m.cols() == 0) return 0.0;
    if (m.cols() == 1) return norm2(m.data());
    if (m.rows() == 1) return norm2(m.data());
    if (m.is_symmetric()) {
        const Vector eig = symmetric_eigenvalues(m);
        return std::max(std::abs(eig.front()), std::abs(eig.back()));
    }
    const Vector eig = symmetric_eigenvalues(m.transposed() * m);
    return std::sqrt(std::max(eig.back(), 0.0));
}

/// Entrywise Euclidean norm |||M|||.
inline double triple_norm(const Matrix& m) noexcept { return norm2(m.data()); }

inline bool is_psd(const Matrix& m, double rel_tol = 1e-12) {
    if (!m.is_symmetric()) return false;
    const Vector eig = symmetric_eigenvalues(m);
    if (eig.empty()) return true;
    const double scale = std::max(std::abs(eig.front()), std::abs(eig.back()));
    return eig.front() >= -rel_tol * scale;
}

} // namespace salab
