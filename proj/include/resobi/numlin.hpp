#ifndef RESOBI_NUMLIN_HPP
#define RESOBI_NUMLIN_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <utility>
#include <vector>

#include "resobi/error.hpp"
#include "resobi/matrix.hpp"

namespace resobi
{

struct Givens
{
    double c = 1.0;
    double s = 0.0;
    double r = 0.0;
};

//
// Rotation with [c s; -s c] * [a; b] = [r; 0] and r >= 0.
//
inline Givens givens_rotation(double a, double b) noexcept
{
    const double r = std::hypot(a, b);
    if (r == 0.0)
        return {1.0, 0.0, 0.0};
    return {a / r, b / r, r};
}

struct EigenPair
{
    std::vector<double> values; // descending
    Matrix vectors;             // column k pairs with values[k]
    std::size_t sweeps = 0;
};

struct SchurForm
{
    Matrix q;
    Matrix t;
    std::size_t iterations = 0;
};

namespace detail
{

// Rotate rows p and q of `a`: row_p <- c*row_p - s*row_q, row_q <- s*row_p + c*row_q,
// restricted to columns [from, cols).
inline void rotate_rows(Matrix& a, std::size_t p, std::size_t q, double c, double s,
                        std::size_t from = 0) noexcept
{
    auto rp = a.row(p);
    auto rq = a.row(q);
    for (std::size_t j = from; j < a.cols(); ++j)
    {
        const double x = rp[j];
        const double y = rq[j];
        rp[j] = c * x - s * y;
        rq[j] = s * x + c * y;
    }
}

// Rotate columns p and q: col_p <- c*col_p - s*col_q, col_q <- s*col_p + c*col_q,
// restricted to rows [0, to).
inline void rotate_cols(Matrix& a, std::size_t p, std::size_t q, double c, double s,
                        std::size_t to) noexcept
{
    for (std::size_t i = 0; i < to; ++i)
    {
        const double x = a(i, p);
        const double y = a(i, q);
        a(i, p) = c * x - s * y;
        a(i, q) = s * x + c * y;
    }
}

inline void sort_and_fix_signs(EigenPair& ep)
{
    const std::size_t n = ep.values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return ep.values[a] > ep.values[b]; });

    std::vector<double> values(n);
    Matrix vectors(n, n);
    for (std::size_t k = 0; k < n; ++k)
    {
        values[k] = ep.values[order[k]];
        std::size_t arg = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (std::abs(ep.vectors(i, order[k])) > std::abs(ep.vectors(arg, order[k])))
                arg = i;
        const double sign = ep.vectors(arg, order[k]) < 0.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < n; ++i)
            vectors(i, k) = sign * ep.vectors(i, order[k]);
    }
    ep.values  = std::move(values);
    ep.vectors = std::move(vectors);
}

} // namespace detail

//
// Symmetric eigendecomposition by cyclic-by-row Jacobi sweeps.
//
// Sweeps stop once the off-diagonal Frobenius mass of V^T A V drops to
// tol*||A||_F; one further sweep is then applied, which (by the quadratic
// convergence of the method) pushes the residual to rounding level.
// Eigenvalues come back in descending order; each eigenvector is signed so
// its largest-magnitude entry is positive.
//
inline EigenPair sym_eig(const Matrix& a, double tol = 1e-10, std::size_t max_sweeps = 100)
{
    if (!a.is_square())
        throw Error(ErrorCode::DimensionMismatch, "sym_eig requires a square matrix");
    if (!(tol > 0.0))
        throw Error(ErrorCode::InvalidArgument, "sym_eig tolerance must be positive");
    if (relative_asymmetry(a) > 1e-10)
        throw Error(ErrorCode::NotSymmetric, "input asymmetry exceeds 1e-10 relative");

    const std::size_t n = a.rows();
    Matrix w = symmetrized(a);
    Matrix v = Matrix::identity(n);
    const double norm = frobenius_norm(w);

    EigenPair ep;
    bool polished = false;
    while (true)
    {
        const double off = std::sqrt(offdiag_sq(w));
        if (off <= tol * norm)
        {
            if (polished || off == 0.0)
                break;
            polished = true;
        }
        if (ep.sweeps >= max_sweeps)
        {
            if (off <= tol * norm)
                break;
            throw Error(ErrorCode::NoConvergence,
                        "Jacobi eigensolver exceeded " + std::to_string(max_sweeps) + " sweeps");
        }
        ++ep.sweeps;
        for (std::size_t p = 0; p + 1 < n; ++p)
        {
            for (std::size_t q = p + 1; q < n; ++q)
            {
                const double apq = w(p, q);
                if (apq == 0.0)
                    continue;
                const double theta = (w(q, q) - w(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                // W <- J^T W J with J = [c s; -s c] acting on (p, q)
                detail::rotate_cols(w, p, q, c, s, n);
                detail::rotate_rows(w, p, q, c, s);
                w(p, q) = 0.0;
                w(q, p) = 0.0;
                detail::rotate_cols(v, p, q, c, s, n);
            }
        }
    }

    ep.values.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        ep.values[i] = w(i, i);
    ep.vectors = std::move(v);
    detail::sort_and_fix_signs(ep);
    return ep;
}

//
// Householder reduction to upper Hessenberg form, returns {H, Q} with
// H = Q^T A Q. Entries below the first subdiagonal are exactly zero.
//
inline std::pair<Matrix, Matrix> hessenberg(const Matrix& a)
{
    if (!a.is_square())
        throw Error(ErrorCode::DimensionMismatch, "hessenberg requires a square matrix");
    const std::size_t n = a.rows();
    Matrix h = a;
    Matrix q = Matrix::identity(n);
    std::vector<double> v(n);

    for (std::size_t k = 0; k + 2 < n; ++k)
    {
        double alpha = 0.0;
        for (std::size_t i = k + 1; i < n; ++i)
            alpha += h(i, k) * h(i, k);
        alpha = std::sqrt(alpha);
        if (alpha == 0.0)
            continue;
        if (h(k + 1, k) > 0.0)
            alpha = -alpha;
        // v = x - alpha*e1 over rows k+1..n-1
        for (std::size_t i = k + 1; i < n; ++i)
            v[i] = h(i, k);
        v[k + 1] -= alpha;
        double vnorm2 = 0.0;
        for (std::size_t i = k + 1; i < n; ++i)
            vnorm2 += v[i] * v[i];
        if (vnorm2 == 0.0)
            continue;
        const double beta = 2.0 / vnorm2;

        // H <- P H
        for (std::size_t j = k; j < n; ++j)
        {
            double d = 0.0;
            for (std::size_t i = k + 1; i < n; ++i)
                d += v[i] * h(i, j);
            d *= beta;
            for (std::size_t i = k + 1; i < n; ++i)
                h(i, j) -= d * v[i];
        }
        // H <- H P, Q <- Q P
        for (Matrix* m : {&h, &q})
        {
            for (std::size_t i = 0; i < n; ++i)
            {
                auto r = m->row(i);
                double d = 0.0;
                for (std::size_t j = k + 1; j < n; ++j)
                    d += r[j] * v[j];
                d *= beta;
                for (std::size_t j = k + 1; j < n; ++j)
                    r[j] -= d * v[j];
            }
        }
        h(k + 1, k) = alpha;
        for (std::size_t i = k + 2; i < n; ++i)
            h(i, k) = 0.0;
    }
    return {std::move(h), std::move(q)};
}

namespace detail
{

// Splits the 2x2 diagonal block at (p, p+1) into upper-triangular form when
// its eigenvalues are real; a complex pair is left as a standard 2x2 block.
inline void standardize_block(Matrix& h, Matrix& q, std::size_t p)
{
    const std::size_t n = h.rows();
    const double a = h(p, p), b = h(p, p + 1), c = h(p + 1, p), d = h(p + 1, p + 1);
    if (c == 0.0)
        return;
    const double half = 0.5 * (a - d);
    const double disc = half * half + b * c;
    if (disc < 0.0)
        return;

    const double lambda = 0.5 * (a + d) + std::copysign(std::sqrt(disc), half);
    // Two candidate eigenvectors of the block; keep the better-scaled one.
    double x1 = b, y1 = lambda - a;
    double x2 = lambda - d, y2 = c;
    const double n1 = std::hypot(x1, y1), n2 = std::hypot(x2, y2);
    double cs, sn;
    if (n1 >= n2)
    {
        if (n1 == 0.0)
            return;
        cs = x1 / n1;
        sn = y1 / n1;
    }
    else
    {
        cs = x2 / n2;
        sn = y2 / n2;
    }
    // G = [cs -sn; sn cs]; H <- G^T H G, Q <- Q G
    rotate_rows(h, p, p + 1, cs, -sn, p);
    rotate_cols(h, p, p + 1, cs, -sn, std::min(p + 2, n));
    rotate_cols(q, p, p + 1, cs, -sn, n);
    h(p + 1, p) = 0.0;
}

// One Francis implicit double-shift QR sweep on the active window [lo, hi]
// (hi - lo >= 2), applied to the full matrix so H stays a Schur form of A.
inline void francis_step(Matrix& h, Matrix& q, std::size_t lo, std::size_t hi, bool exceptional)
{
    const std::size_t n = h.rows();
    double s, t;
    if (exceptional)
    {
        const double e   = std::abs(h(hi, hi - 1)) + std::abs(h(hi - 1, hi - 2));
        const double h11 = 0.75 * e + h(hi, hi);
        const double h12 = -0.4375 * e;
        s = 2.0 * h11;
        t = h11 * h11 - h12 * e;
    }
    else
    {
        s = h(hi - 1, hi - 1) + h(hi, hi);
        t = h(hi - 1, hi - 1) * h(hi, hi) - h(hi - 1, hi) * h(hi, hi - 1);
    }

    double x = h(lo, lo) * h(lo, lo) + h(lo, lo + 1) * h(lo + 1, lo) - s * h(lo, lo) + t;
    double y = h(lo + 1, lo) * (h(lo, lo) + h(lo + 1, lo + 1) - s);
    double z = h(lo + 1, lo) * h(lo + 2, lo + 1);

    for (std::size_t k = lo; k + 2 <= hi; ++k)
    {
        const double norm = std::sqrt(x * x + y * y + z * z);
        if (norm != 0.0)
        {
            const double alpha = x > 0.0 ? -norm : norm;
            const double v0 = x - alpha, v1 = y, v2 = z;
            const double beta = 2.0 / (v0 * v0 + v1 * v1 + v2 * v2);

            const std::size_t col_start = k > lo ? k - 1 : lo;
            for (std::size_t j = col_start; j < n; ++j)
            {
                const double d = beta * (v0 * h(k, j) + v1 * h(k + 1, j) + v2 * h(k + 2, j));
                h(k, j) -= d * v0;
                h(k + 1, j) -= d * v1;
                h(k + 2, j) -= d * v2;
            }
            const std::size_t row_end = std::min(k + 3, hi);
            for (std::size_t i = 0; i <= row_end; ++i)
            {
                const double d = beta * (h(i, k) * v0 + h(i, k + 1) * v1 + h(i, k + 2) * v2);
                h(i, k) -= d * v0;
                h(i, k + 1) -= d * v1;
                h(i, k + 2) -= d * v2;
            }
            for (std::size_t i = 0; i < n; ++i)
            {
                const double d = beta * (q(i, k) * v0 + q(i, k + 1) * v1 + q(i, k + 2) * v2);
                q(i, k) -= d * v0;
                q(i, k + 1) -= d * v1;
                q(i, k + 2) -= d * v2;
            }
            if (k > lo)
            {
                h(k, k - 1)     = alpha;
                h(k + 1, k - 1) = 0.0;
                h(k + 2, k - 1) = 0.0;
            }
        }
        x = h(k + 1, k);
        y = h(k + 2, k);
        if (k + 3 <= hi)
            z = h(k + 3, k);
    }

    // Closing 2x2 rotation on rows/cols (hi-1, hi).
    const Givens g = givens_rotation(x, y);
    rotate_rows(h, hi - 1, hi, g.c, -g.s, hi - 2);
    rotate_cols(h, hi - 1, hi, g.c, -g.s, hi + 1);
    rotate_cols(q, hi - 1, hi, g.c, -g.s, n);
    h(hi, hi - 2) = 0.0;
}

} // namespace detail

//
// Real Schur decomposition A = Q T Q^T.
//
// Householder Hessenberg reduction followed by Francis implicit double-shift
// QR. A subdiagonal entry is deflated once |h[k+1,k]| <= tol*(|h[k,k]| +
// |h[k+1,k+1]|). 2x2 diagonal blocks with real eigenvalues are split, so the
// blocks left in T always hold complex-conjugate pairs. `max_iterations`
// bounds the total number of QR sweeps (0 selects 30*n).
//
inline SchurForm real_schur(const Matrix& a, double tol = 1e-12, std::size_t max_iterations = 0)
{
    if (!a.is_square())
        throw Error(ErrorCode::DimensionMismatch, "real_schur requires a square matrix");
    if (!(tol > 0.0))
        throw Error(ErrorCode::InvalidArgument, "real_schur tolerance must be positive");
    const std::size_t n = a.rows();
    if (max_iterations == 0)
        max_iterations = 30 * n;

    auto [h, q] = hessenberg(a);
    const double norm = frobenius_norm(h);
    SchurForm out;
    std::size_t since_deflation = 0;

    std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(n) - 1;
    while (hi >= 0)
    {
        std::ptrdiff_t lo = hi;
        for (; lo > 0; --lo)
        {
            double scale = std::abs(h(lo - 1, lo - 1)) + std::abs(h(lo, lo));
            if (scale == 0.0)
                scale = norm;
            if (std::abs(h(lo, lo - 1)) <= tol * scale)
            {
                h(lo, lo - 1) = 0.0;
                break;
            }
        }

        if (lo == hi)
        {
            --hi;
            since_deflation = 0;
            continue;
        }
        if (lo == hi - 1)
        {
            detail::standardize_block(h, q, static_cast<std::size_t>(lo));
            hi -= 2;
            since_deflation = 0;
            continue;
        }
        if (out.iterations >= max_iterations)
            throw Error(ErrorCode::NoConvergence,
                        "shifted QR did not deflate within " + std::to_string(max_iterations) +
                            " iterations");
        ++out.iterations;
        ++since_deflation;
        detail::francis_step(h, q, static_cast<std::size_t>(lo), static_cast<std::size_t>(hi),
                             since_deflation % 10 == 0);
    }

    for (std::size_t i = 2; i < n; ++i)
        for (std::size_t j = 0; j + 1 < i; ++j)
            h(i, j) = 0.0;
    out.q = std::move(q);
    out.t = std::move(h);
    return out;
}

//
// Eigenvalues encoded in a real Schur form: real parts and imaginary parts.
// A 2x2 block contributes a conjugate pair.
//
inline std::vector<std::pair<double, double>> schur_eigenvalues(const Matrix& t)
{
    std::vector<std::pair<double, double>> ev;
    const std::size_t n = t.rows();
    for (std::size_t k = 0; k < n;)
    {
        if (k + 1 < n && t(k + 1, k) != 0.0)
        {
            const double a = t(k, k), b = t(k, k + 1), c = t(k + 1, k), d = t(k + 1, k + 1);
            const double half = 0.5 * (a - d);
            const double disc = half * half + b * c;
            const double mid  = 0.5 * (a + d);
            if (disc >= 0.0)
            {
                ev.emplace_back(mid + std::sqrt(disc), 0.0);
                ev.emplace_back(mid - std::sqrt(disc), 0.0);
            }
            else
            {
                ev.emplace_back(mid, std::sqrt(-disc));
                ev.emplace_back(mid, -std::sqrt(-disc));
            }
            k += 2;
        }
        else
        {
            ev.emplace_back(t(k, k), 0.0);
            ++k;
        }
    }
    return ev;
}

//
// Moore-Penrose pseudo-inverse through the eigendecomposition of A^T A (or
// A A^T when A is wide). Eigenvalues below 1e-12*lambda_max are treated as
// zero.
//
inline Matrix pseudo_inverse(const Matrix& a)
{
    if (a.empty())
        throw Error(ErrorCode::InvalidArgument, "pseudo_inverse of an empty matrix");
    const bool tall = a.rows() >= a.cols();
    const Matrix at = a.transposed();
    const Matrix gram = symmetrized(tall ? at * a : a * at);
    const EigenPair ep = sym_eig(gram, 1e-14);
    const std::size_t k = gram.rows();

    const double lmax = ep.values.empty() ? 0.0 : ep.values.front();
    Matrix inv_gram(k, k);
    if (lmax > 0.0)
    {
        for (std::size_t e = 0; e < k; ++e)
        {
            const double lambda = ep.values[e];
            if (lambda <= 1e-12 * lmax)
                continue;
            for (std::size_t i = 0; i < k; ++i)
            {
                const double vi = ep.vectors(i, e) / lambda;
                if (vi == 0.0)
                    continue;
                for (std::size_t j = 0; j < k; ++j)
                    inv_gram(i, j) += vi * ep.vectors(j, e);
            }
        }
    }
    return tall ? inv_gram * at : at * inv_gram;
}

} // namespace resobi

#endif
