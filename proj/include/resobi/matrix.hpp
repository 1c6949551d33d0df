#ifndef RESOBI_MATRIX_HPP
#define RESOBI_MATRIX_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "resobi/error.hpp"

namespace resobi
{

//
// Dense real matrix stored row-major. A default-constructed Matrix is empty
// (0x0) and acts as "no value"; every sized matrix has positive dimensions.
//
class Matrix
{
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill)
    {
        if (rows == 0 || cols == 0)
            throw Error(ErrorCode::InvalidArgument, "matrix dimensions must be positive");
    }

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data))
    {
        if (rows == 0 || cols == 0)
            throw Error(ErrorCode::InvalidArgument, "matrix dimensions must be positive");
        if (data_.size() != rows * cols)
            throw Error(ErrorCode::DimensionMismatch,
                        "data length " + std::to_string(data_.size()) + " != " +
                            std::to_string(rows) + "x" + std::to_string(cols));
        if (!all_finite())
            throw Error(ErrorCode::InvalidArgument, "matrix entries must be finite");
    }

    Matrix(std::initializer_list<std::initializer_list<double>> rows)
    {
        rows_ = rows.size();
        cols_ = rows_ == 0 ? 0 : rows.begin()->size();
        if (rows_ == 0 || cols_ == 0)
            throw Error(ErrorCode::InvalidArgument, "matrix dimensions must be positive");
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows)
        {
            if (r.size() != cols_)
                throw Error(ErrorCode::DimensionMismatch, "ragged initializer list");
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    static Matrix identity(std::size_t n)
    {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i)
            m(i, i) = 1.0;
        return m;
    }

    static Matrix diagonal(std::span<const double> values)
    {
        Matrix m(values.size(), values.size());
        for (std::size_t i = 0; i < values.size(); ++i)
            m(i, i) = values[i];
        return m;
    }

    static Matrix diagonal(std::initializer_list<double> values)
    {
        return diagonal(std::span<const double>(values.begin(), values.size()));
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }
    bool is_square() const noexcept { return rows_ == cols_ && rows_ > 0; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept
    {
        return {data_.data() + i * cols_, cols_};
    }

    std::vector<double> col(std::size_t j) const
    {
        std::vector<double> c(rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            c[i] = (*this)(i, j);
        return c;
    }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    bool all_finite() const noexcept
    {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    Matrix transposed() const
    {
        if (empty())
            return {};
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j)
                t(j, i) = (*this)(i, j);
        return t;
    }

    Matrix& operator+=(const Matrix& o)
    {
        check_same_shape(o);
        for (std::size_t k = 0; k < data_.size(); ++k)
            data_[k] += o.data_[k];
        return *this;
    }

    Matrix& operator-=(const Matrix& o)
    {
        check_same_shape(o);
        for (std::size_t k = 0; k < data_.size(); ++k)
            data_[k] -= o.data_[k];
        return *this;
    }

    Matrix& operator*=(double s) noexcept
    {
        for (auto& v : data_)
            v *= s;
        return *this;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    void check_same_shape(const Matrix& o) const
    {
        if (rows_ != o.rows_ || cols_ != o.cols_)
            throw Error(ErrorCode::DimensionMismatch, "matrix shapes differ");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
inline Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
inline Matrix operator*(Matrix a, double s) { return a *= s; }
inline Matrix operator*(double s, Matrix a) { return a *= s; }

inline Matrix operator*(const Matrix& a, const Matrix& b)
{
    if (a.cols() != b.rows())
        throw Error(ErrorCode::DimensionMismatch,
                    "cannot multiply " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                        " by " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
    {
        auto ci = c.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k)
        {
            const double aik = a(i, k);
            if (aik == 0.0)
                continue;
            auto bk = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j)
                ci[j] += aik * bk[j];
        }
    }
    return c;
}

inline std::vector<double> operator*(const Matrix& a, std::span<const double> x)
{
    if (a.cols() != x.size())
        throw Error(ErrorCode::DimensionMismatch, "matrix-vector size mismatch");
    std::vector<double> y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i)
    {
        auto ai = a.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j)
            s += ai[j] * x[j];
        y[i] = s;
    }
    return y;
}

// Unrolled dot product; the four partial sums keep the FP pipeline busy.
inline double dot(std::span<const double> x, std::span<const double> y) noexcept
{
    const std::size_t n = std::min(x.size(), y.size());
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4)
    {
        s0 += x[k] * y[k];
        s1 += x[k + 1] * y[k + 1];
        s2 += x[k + 2] * y[k + 2];
        s3 += x[k + 3] * y[k + 3];
    }
    for (; k < n; ++k)
        s0 += x[k] * y[k];
    return (s0 + s1) + (s2 + s3);
}

inline double frobenius_norm(const Matrix& a) noexcept
{
    return std::sqrt(dot(a.data(), a.data()));
}

inline double max_abs(const Matrix& a) noexcept
{
    double m = 0.0;
    for (double v : a.data())
        m = std::max(m, std::abs(v));
    return m;
}

// Sum of squared off-diagonal entries of a square matrix.
inline double offdiag_sq(const Matrix& a) noexcept
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (i != j)
                s += a(i, j) * a(i, j);
    return s;
}

inline Matrix symmetrized(const Matrix& a)
{
    if (!a.is_square())
        throw Error(ErrorCode::DimensionMismatch, "symmetrize requires a square matrix");
    Matrix s(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            s(i, j) = 0.5 * (a(i, j) + a(j, i));
    return s;
}

// Largest |a_ij - a_ji|, relative to the Frobenius norm (0 for a zero matrix).
inline double relative_asymmetry(const Matrix& a) noexcept
{
    double worst = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j)
            worst = std::max(worst, std::abs(a(i, j) - a(j, i)));
    const double norm = frobenius_norm(a);
    return norm > 0.0 ? worst / norm : 0.0;
}

// ||Q^T Q - I||_F
inline double orthogonality_error(const Matrix& q)
{
    Matrix g = q.transposed() * q;
    for (std::size_t i = 0; i < g.rows(); ++i)
        g(i, i) -= 1.0;
    return frobenius_norm(g);
}

} // namespace resobi

#endif
