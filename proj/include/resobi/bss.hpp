#ifndef RESOBI_BSS_HPP
#define RESOBI_BSS_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "resobi/error.hpp"
#include "resobi/feat.hpp"
#include "resobi/matrix.hpp"
#include "resobi/numlin.hpp"
#include "resobi/recording.hpp"
#include "resobi/rng.hpp"

namespace resobi
{

enum class Method
{
    Jacobi,
    Schur,
};

inline std::string_view to_string(Method m) noexcept
{
    return m == Method::Jacobi ? "jacobi" : "schur";
}

inline Method parse_method(std::string_view s)
{
    if (s == "jacobi")
        return Method::Jacobi;
    if (s == "schur")
        return Method::Schur;
    throw Error(ErrorCode::InvalidArgument, "unknown method '" + std::string(s) + "'");
}

inline std::vector<std::size_t> default_lags()
{
    std::vector<std::size_t> lags(10);
    std::iota(lags.begin(), lags.end(), std::size_t{1});
    return lags;
}

//-----------------------------------------------------------------------------
// Second-order statistics
//-----------------------------------------------------------------------------

// Removes per-row means (two-pass, so the residual mean is at rounding level).
inline std::pair<Matrix, std::vector<double>> center(const Matrix& x)
{
    Matrix out = x;
    std::vector<double> means(x.rows(), 0.0);
    const double inv_t = 1.0 / static_cast<double>(x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i)
    {
        auto r = out.row(i);
        double m = 0.0;
        for (double v : r)
            m += v;
        m *= inv_t;
        double corr = 0.0;
        for (double v : r)
            corr += v - m;
        m += corr * inv_t;
        for (double& v : r)
            v -= m;
        means[i] = m;
    }
    return {std::move(out), std::move(means)};
}

inline std::pair<Recording, std::vector<double>> center(const Recording& rec)
{
    auto [x, means] = center(rec.data());
    return {Recording(std::move(x), rec.sample_rate(), rec.channel_names()), std::move(means)};
}

namespace detail
{

inline void check_lag(std::size_t lag, std::size_t samples)
{
    if (2 * lag >= samples)
        throw Error(ErrorCode::LagTooLarge, "lag " + std::to_string(lag) +
                                                " must be below half of " +
                                                std::to_string(samples) + " samples");
}

} // namespace detail

//
// Symmetrized lagged covariance 0.5*(C + C^T) with
// C = X[:, 0..T-lag) X[:, lag..T)^T / (T - lag). X is expected to be centered.
//
inline Matrix lagged_covariance(const Matrix& x, std::size_t lag)
{
    const std::size_t n = x.rows();
    const std::size_t t = x.cols();
    detail::check_lag(lag, t);
    const std::size_t len = t - lag;
    const double inv = 1.0 / static_cast<double>(len);

    Matrix c(n, n);
    if (lag == 0)
    {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j)
                c(i, j) = c(j, i) = dot(x.row(i), x.row(j)) * inv;
        return c;
    }
    for (std::size_t i = 0; i < n; ++i)
    {
        const auto head = x.row(i).first(len);
        for (std::size_t j = 0; j < n; ++j)
            c(i, j) = dot(head, x.row(j).subspan(lag, len)) * inv;
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            c(i, j) = c(j, i) = 0.5 * (c(i, j) + c(j, i));
    return c;
}

struct LaggedCovarianceSet
{
    std::vector<std::size_t> lags;
    std::vector<Matrix> matrices;
};

inline LaggedCovarianceSet lagged_covariances(const Matrix& x, std::span<const std::size_t> lags)
{
    LaggedCovarianceSet set;
    set.lags.assign(lags.begin(), lags.end());
    set.matrices.reserve(lags.size());
    for (auto lag : lags)
        set.matrices.push_back(lagged_covariance(x, lag));
    return set;
}

//
// sum_k w_k * lagged_covariance(x, lags[k]) in a single pass over the data.
//
// The weighted lag-shifted copies are first folded into one n x T buffer
//   Y[:, t] = sum_{k : t + lag_k < T} w_k / (T - lag_k) * x[:, t + lag_k]
// so that the combination is a single product X Y^T instead of one product
// per lag.
//
inline Matrix combined_lagged_covariance(const Matrix& x, std::span<const std::size_t> lags,
                                         std::span<const double> weights)
{
    if (lags.empty() || lags.size() != weights.size())
        throw Error(ErrorCode::DimensionMismatch, "need one weight per lag");
    const std::size_t n = x.rows();
    const std::size_t t = x.cols();
    Matrix y(n, t);
    for (std::size_t k = 0; k < lags.size(); ++k)
    {
        detail::check_lag(lags[k], t);
        const std::size_t len = t - lags[k];
        const double c = weights[k] / static_cast<double>(len);
        for (std::size_t i = 0; i < n; ++i)
        {
            const auto src = x.row(i).subspan(lags[k], len);
            auto dst = y.row(i);
            for (std::size_t s = 0; s < len; ++s)
                dst[s] += c * src[s];
        }
    }
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            m(i, j) = dot(x.row(i), y.row(j));
    return symmetrized(m);
}

//-----------------------------------------------------------------------------
// Whitening
//-----------------------------------------------------------------------------

struct Whitener
{
    Matrix w;      // r x n
    Matrix w_pinv; // n x r
    std::size_t retained_rank = 0;
    std::vector<double> eigenvalues; // all n, descending
};

// W = Lambda_r^{-1/2} E_r^T over eigenpairs with lambda >= rank_tol * lambda_max.
inline Whitener whiten_from_covariance(const Matrix& cov0, double rank_tol = 1e-6)
{
    const EigenPair ep = sym_eig(cov0, 1e-12);
    const double lmax = ep.values.front();
    if (!(lmax > 0.0))
        throw Error(ErrorCode::DegenerateData, "zero-variance data cannot be whitened");

    std::size_t r = 0;
    while (r < ep.values.size() && ep.values[r] >= rank_tol * lmax)
        ++r;
    const std::size_t n = cov0.rows();
    Whitener wh;
    wh.retained_rank = r;
    wh.eigenvalues   = ep.values;
    wh.w = Matrix(r, n);
    for (std::size_t k = 0; k < r; ++k)
    {
        const double s = 1.0 / std::sqrt(ep.values[k]);
        for (std::size_t j = 0; j < n; ++j)
            wh.w(k, j) = s * ep.vectors(j, k);
    }
    wh.w_pinv = pseudo_inverse(wh.w);
    return wh;
}

inline Whitener whiten(const Matrix& centered, double rank_tol = 1e-6)
{
    return whiten_from_covariance(lagged_covariance(centered, 0), rank_tol);
}

inline Whitener whiten(const Recording& centered, double rank_tol = 1e-6)
{
    return whiten(centered.data(), rank_tol);
}

// W M W^T, symmetrized.
inline Matrix congruence(const Matrix& w, const Matrix& m)
{
    return symmetrized(w * m * w.transposed());
}

//-----------------------------------------------------------------------------
// Joint diagonalization
//-----------------------------------------------------------------------------

// sum_k offdiag_sq(R^T M_k R)
inline double off_diagonality(std::span<const Matrix> set, const Matrix& rotation)
{
    const Matrix rt = rotation.transposed();
    double score = 0.0;
    for (const auto& m : set)
        score += offdiag_sq(rt * m * rotation);
    return score;
}

namespace detail
{

inline void check_symmetric_set(std::span<const Matrix> set)
{
    if (set.empty())
        throw Error(ErrorCode::Empty, "empty matrix set");
    const std::size_t r = set.front().rows();
    for (const auto& m : set)
    {
        if (!m.is_square() || m.rows() != r)
            throw Error(ErrorCode::DimensionMismatch, "set matrices must be square and equal-sized");
        if (relative_asymmetry(m) > 1e-10)
            throw Error(ErrorCode::NotSymmetric, "set matrix is not symmetric");
    }
}

} // namespace detail

struct JointDiagonalization
{
    Matrix rotation;
    double score = 0.0;
    std::size_t sweeps = 0;
    std::vector<double> score_history; // before the first sweep, then after each
    bool converged = true;
};

//
// Orthogonal joint approximate diagonalization by Givens sweeps over all
// (p, q) pairs. Each pair angle is the closed-form minimizer of the summed
// off-diagonal mass for that plane, so the score never increases. Stops
// after a sweep in which every angle has |sin| <= tol; on hitting
// max_sweeps the current rotation is returned with converged = false.
//
inline JointDiagonalization joint_diagonalize_jacobi(std::span<const Matrix> set, double tol = 1e-8,
                                                     std::size_t max_sweeps = 100)
{
    detail::check_symmetric_set(set);
    if (!(tol > 0.0))
        throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");

    const std::size_t r = set.front().rows();
    std::vector<Matrix> a;
    a.reserve(set.size());
    for (const auto& m : set)
        a.push_back(symmetrized(m));

    JointDiagonalization out;
    out.rotation = Matrix::identity(r);
    auto current_score = [&] {
        double s = 0.0;
        for (const auto& m : a)
            s += offdiag_sq(m);
        return s;
    };
    out.score_history.push_back(current_score());

    bool rotated = true;
    while (rotated)
    {
        if (out.sweeps >= max_sweeps)
        {
            out.converged = false;
            break;
        }
        rotated = false;
        ++out.sweeps;
        const Matrix saved_rotation = out.rotation;
        const std::vector<Matrix> saved = a;
        for (std::size_t p = 0; p + 1 < r; ++p)
        {
            for (std::size_t q = p + 1; q < r; ++q)
            {
                double g00 = 0.0, g01 = 0.0, g11 = 0.0, diag = 0.0;
                for (const auto& m : a)
                {
                    const double d = m(p, p) - m(q, q);
                    const double o = m(p, q) + m(q, p);
                    g00 += d * d;
                    g01 += d * o;
                    g11 += o * o;
                    diag += m(p, p) * m(p, p) + m(q, q) * m(q, q);
                }
                // Plane already diagonal to rounding: any angle is optimal.
                if (g11 <= 1e-28 * diag)
                    continue;
                const double ton   = g00 - g11;
                const double toff  = 2.0 * g01;
                const double theta = 0.5 * std::atan2(toff, ton + std::sqrt(ton * ton + toff * toff));
                const double c = std::cos(theta);
                const double s = std::sin(theta);
                if (std::abs(s) <= tol)
                    continue;
                rotated = true;
                // G = [c -s; s c]: V <- V G, M <- G^T M G
                detail::rotate_cols(out.rotation, p, q, c, -s, r);
                for (auto& m : a)
                {
                    detail::rotate_rows(m, p, q, c, -s);
                    detail::rotate_cols(m, p, q, c, -s, r);
                }
            }
        }
        const double score = current_score();
        // A sweep that only adds rounding noise is undone; the previous rotation is the fixed point.
        if (score > out.score_history.back())
        {
            out.rotation = saved_rotation;
            a            = saved;
            break;
        }
        out.score_history.push_back(score);
    }
    out.score = out.score_history.back();
    return out;
}

struct SchurOptions
{
    double tol = 1e-12;
    std::size_t max_iterations = 0;
    std::uint64_t seed = 0;
};

struct SchurDiagonalization
{
    Matrix rotation;
    double score = 0.0;
    std::size_t iterations = 0;
    bool degenerate = false;       // the first combination had an eigen-gap below 1e-8*|lambda|_max
    bool still_degenerate = false; // and so did the reweighted retry
    std::vector<double> weights;   // weights of the accepted combination
};

namespace detail
{

inline bool has_degenerate_spectrum(const Matrix& t)
{
    std::vector<double> ev(t.rows());
    for (std::size_t i = 0; i < t.rows(); ++i)
        ev[i] = t(i, i);
    std::sort(ev.begin(), ev.end());
    double scale = 0.0;
    for (double v : ev)
        scale = std::max(scale, std::abs(v));
    if (scale == 0.0)
        return true;
    for (std::size_t i = 1; i < ev.size(); ++i)
        if (ev[i] - ev[i - 1] < 1e-8 * scale)
            return true;
    return false;
}

} // namespace detail

//
// Schur route on a combination produced by `combine(weights)`. If the
// combined matrix has a repeated eigenvalue, its eigenvectors are not
// determined, so the combination is rebuilt once with seeded weights drawn
// from [0.5, 1.5]. The score is left to the caller.
//
template <typename Combine>
SchurDiagonalization diagonalize_combined(Combine&& combine, std::vector<double> weights,
                                          const SchurOptions& opts = {})
{
    SchurDiagonalization out;
    SchurForm sf = real_schur(symmetrized(combine(std::span<const double>(weights))), opts.tol,
                              opts.max_iterations);
    out.iterations = sf.iterations;
    if (detail::has_degenerate_spectrum(sf.t))
    {
        out.degenerate = true;
        Rng rng(opts.seed);
        for (auto& w : weights)
            w = rng.uniform(0.5, 1.5);
        sf = real_schur(symmetrized(combine(std::span<const double>(weights))), opts.tol,
                        opts.max_iterations);
        out.iterations += sf.iterations;
        out.still_degenerate = detail::has_degenerate_spectrum(sf.t);
    }
    out.rotation = std::move(sf.q);
    out.weights  = std::move(weights);
    return out;
}

//
// Diagonalizes sum_k w_k M_k by one real Schur decomposition. The score is
// the same off-diagonality functional as the Jacobi route, evaluated on the
// original set.
//
inline SchurDiagonalization diagonalize_schur(std::span<const Matrix> set,
                                              std::span<const double> weights,
                                              const SchurOptions& opts = {})
{
    detail::check_symmetric_set(set);
    if (weights.size() != set.size())
        throw Error(ErrorCode::DimensionMismatch, "need one weight per matrix");
    double wsum = 0.0;
    for (double w : weights)
        wsum += std::abs(w);
    if (!(wsum > 0.0))
        throw Error(ErrorCode::InvalidArgument, "weights must not all be zero");

    auto combine = [&](std::span<const double> w) {
        Matrix m(set.front().rows(), set.front().cols());
        for (std::size_t k = 0; k < set.size(); ++k)
            m += set[k] * w[k];
        return m;
    };
    auto out  = diagonalize_combined(combine, std::vector<double>(weights.begin(), weights.end()), opts);
    out.score = off_diagonality(set, out.rotation);
    return out;
}

//-----------------------------------------------------------------------------
// SOBI
//-----------------------------------------------------------------------------

struct SobiOptions
{
    std::vector<std::size_t> lags = default_lags();
    Method method = Method::Schur;
    double tol = 1e-8;                  // Jacobi: rotation threshold on |sin|
    std::size_t max_sweeps = 100;       // Jacobi
    double rank_tol = 1e-6;             // whitening
    double schur_tol = 1e-12;           // Schur deflation
    std::size_t schur_max_iterations = 0;
    std::uint64_t seed = 0;             // Schur reweighting on a degenerate combination
    double identifiability_tol = 1e-2;  // min separation of whitened lag profiles
};

struct SeparationDiagnostics
{
    double score = 0.0;                 // off-diagonality over the whitened lagged set
    std::size_t iterations = 0;         // Jacobi sweeps or Schur QR iterations
    std::vector<double> score_history;  // Jacobi only
    std::vector<Warning> warnings;
    std::vector<double> combination_weights; // Schur only
};

struct SeparationResult
{
    Method method = Method::Schur;
    Matrix unmixing;        // r x n
    Matrix mixing_estimate; // n x r
    Matrix sources;         // r x T
    Matrix rotation;        // r x r
    double elapsed_seconds = 0.0;
    std::vector<double> means;
    double sample_rate = 0.0;
    std::vector<std::string> channel_names;
    std::vector<std::size_t> lags;
    SeparationDiagnostics diagnostics;

    std::size_t components() const noexcept { return rotation.rows(); }

    bool has_warning(Warning w) const noexcept
    {
        return std::find(diagnostics.warnings.begin(), diagnostics.warnings.end(), w) !=
               diagnostics.warnings.end();
    }
};

namespace detail
{

// Orders rotation columns by descending back-projected variance
// (||mixing column||^2, since every whitened source has unit variance) and
// signs them so the largest-magnitude mixing entry is positive.
inline Matrix canonical_rotation(const Matrix& rotation, const Matrix& w_pinv)
{
    const Matrix mixing = w_pinv * rotation;
    const std::size_t r = rotation.cols();
    std::vector<double> power(r, 0.0);
    std::vector<double> sign(r, 1.0);
    for (std::size_t k = 0; k < r; ++k)
    {
        std::size_t arg = 0;
        for (std::size_t i = 0; i < mixing.rows(); ++i)
        {
            power[k] += mixing(i, k) * mixing(i, k);
            if (std::abs(mixing(i, k)) > std::abs(mixing(arg, k)))
                arg = i;
        }
        sign[k] = mixing(arg, k) < 0.0 ? -1.0 : 1.0;
    }
    std::vector<std::size_t> order(r);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return power[a] > power[b]; });
    Matrix out(rotation.rows(), r);
    for (std::size_t k = 0; k < r; ++k)
        for (std::size_t i = 0; i < rotation.rows(); ++i)
            out(i, k) = sign[order[k]] * rotation(i, order[k]);
    return out;
}

} // namespace detail

//
// Second-order blind identification:
//   center -> whiten -> lagged covariances -> rotation -> assemble.
//
// Method::Jacobi jointly diagonalizes the whitened covariances at every lag.
// Method::Schur diagonalizes their uniform-weight average with a single real
// Schur decomposition; that average is accumulated in one pass over the data
// (see combined_lagged_covariance), which is where its speed comes from.
//
// elapsed_seconds covers the separation itself on a monotonic clock. The
// diagnostics (score on the full whitened lagged set, identifiability check)
// are evaluated afterwards and are not timed.
//
inline SeparationResult sobi(const Recording& rec, const SobiOptions& opts = {})
{
    using clock = std::chrono::steady_clock;
    if (opts.lags.empty())
        throw Error(ErrorCode::InvalidArgument, "at least one lag is required");
    for (auto lag : opts.lags)
        detail::check_lag(lag, rec.samples());

    const auto started = clock::now();
    const auto [xc, means] = center(rec.data());
    const Whitener wh = whiten(xc, opts.rank_tol);

    SeparationResult res;
    res.method = opts.method;
    std::vector<Matrix> whitened_set;
    Matrix rotation;
    if (opts.method == Method::Jacobi)
    {
        whitened_set.reserve(opts.lags.size());
        for (auto lag : opts.lags)
            whitened_set.push_back(congruence(wh.w, lagged_covariance(xc, lag)));
        auto jd = joint_diagonalize_jacobi(whitened_set, opts.tol, opts.max_sweeps);
        rotation = std::move(jd.rotation);
        res.diagnostics.iterations    = jd.sweeps;
        res.diagnostics.score_history = std::move(jd.score_history);
        if (!jd.converged)
            res.diagnostics.warnings.push_back(Warning::NoConvergence);
    }
    else
    {
        const std::vector<double> uniform(opts.lags.size(), 1.0 / static_cast<double>(opts.lags.size()));
        auto combine = [&](std::span<const double> w) {
            return congruence(wh.w, combined_lagged_covariance(xc, opts.lags, w));
        };
        SchurOptions so{opts.schur_tol, opts.schur_max_iterations, opts.seed};
        auto sd  = diagonalize_combined(combine, uniform, so);
        rotation = std::move(sd.rotation);
        res.diagnostics.iterations          = sd.iterations;
        res.diagnostics.combination_weights = std::move(sd.weights);
        if (sd.degenerate)
            res.diagnostics.warnings.push_back(Warning::DegenerateCombination);
    }

    res.rotation        = detail::canonical_rotation(rotation, wh.w_pinv);
    res.unmixing        = res.rotation.transposed() * wh.w;
    res.mixing_estimate = wh.w_pinv * res.rotation;
    res.sources         = res.unmixing * xc;
    res.elapsed_seconds = std::chrono::duration<double>(clock::now() - started).count();

    res.means         = means;
    res.sample_rate   = rec.sample_rate();
    res.channel_names = rec.channel_names();
    res.lags          = opts.lags;

    if (whitened_set.empty())
        for (auto lag : opts.lags)
            whitened_set.push_back(congruence(wh.w, lagged_covariance(xc, lag)));
    res.diagnostics.score = off_diagonality(whitened_set, res.rotation);

    // Two components whose lag profiles coincide cannot be told apart.
    const std::size_t r = res.rotation.cols();
    std::vector<Matrix> rotated;
    rotated.reserve(whitened_set.size());
    const Matrix rt = res.rotation.transposed();
    for (const auto& m : whitened_set)
        rotated.push_back(rt * m * res.rotation);
    bool unidentifiable = false;
    for (std::size_t i = 0; i < r && !unidentifiable; ++i)
    {
        for (std::size_t j = i + 1; j < r && !unidentifiable; ++j)
        {
            double gap = 0.0;
            for (const auto& m : rotated)
                gap = std::max(gap, std::abs(m(i, i) - m(j, j)));
            unidentifiable = gap < opts.identifiability_tol;
        }
    }
    if (unidentifiable)
        res.diagnostics.warnings.push_back(Warning::Unidentifiable);
    return res;
}

//-----------------------------------------------------------------------------
// Artifact handling
//-----------------------------------------------------------------------------

struct ArtifactCriteria
{
    double low_freq_hz       = 4.0;  // eye-blink band is [0, low_freq_hz)
    double low_freq_fraction = 0.6;
    double line_low_hz       = 49.0;
    double line_high_hz      = 51.0;
    double line_fraction     = 0.5;
};

struct ComponentSpectralProfile
{
    double low_fraction  = 0.0;
    double line_fraction = 0.0;
};

inline ComponentSpectralProfile spectral_profile(std::span<const double> component, double fs,
                                                 const ArtifactCriteria& criteria = {})
{
    const Spectrum s = periodogram(component, fs);
    const double total = s.total();
    ComponentSpectralProfile p;
    if (!(total > 0.0))
        return p;
    double low = 0.0;
    for (std::size_t k = 0; k < s.power.size(); ++k)
        if (s.frequencies[k] < criteria.low_freq_hz)
            low += s.power[k];
    p.low_fraction  = low * s.df / total;
    p.line_fraction = s.in_range(criteria.line_low_hz, criteria.line_high_hz) / total;
    return p;
}

// Components that look like eye blinks (mostly below 4 Hz) or mains
// interference (mostly within 49-51 Hz).
inline std::vector<std::size_t> flag_artifact_components(const SeparationResult& res, double fs,
                                                         const ArtifactCriteria& criteria = {})
{
    if (res.sources.empty())
        throw Error(ErrorCode::Empty, "separation has no sources");
    std::vector<std::size_t> flagged;
    for (std::size_t k = 0; k < res.sources.rows(); ++k)
    {
        const auto p = spectral_profile(res.sources.row(k), fs, criteria);
        if (p.low_fraction > criteria.low_freq_fraction || p.line_fraction > criteria.line_fraction)
            flagged.push_back(k);
    }
    return flagged;
}

//
// Back-projects every component except `indices` and restores the channel
// means. Removing nothing yields the rank-r approximation of the input.
//
inline Recording remove_components(const SeparationResult& res, std::span<const std::size_t> indices)
{
    const std::size_t r = res.components();
    Matrix kept = res.mixing_estimate;
    for (auto idx : indices)
    {
        if (idx >= r)
            throw Error(ErrorCode::IndexOutOfRange, "component " + std::to_string(idx) +
                                                        " out of range (" + std::to_string(r) +
                                                        " components)");
        for (std::size_t i = 0; i < kept.rows(); ++i)
            kept(i, idx) = 0.0;
    }
    Matrix x = kept * res.sources;
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (double& v : x.row(i))
            v += res.means[i];
    return Recording(std::move(x), res.sample_rate, res.channel_names);
}

} // namespace resobi

#endif
