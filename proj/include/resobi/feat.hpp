#ifndef RESOBI_FEAT_HPP
#define RESOBI_FEAT_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "resobi/error.hpp"
#include "resobi/matrix.hpp"

namespace resobi
{

namespace detail
{

using cplx = std::complex<double>;

inline bool is_pow2(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 FFT, forward sign convention exp(-2 pi i k t / N).
inline void fft_pow2(std::vector<cplx>& a, bool inverse = false)
{
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i)
    {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1)
            j ^= bit;
        j ^= bit;
        if (i < j)
            std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1)
    {
        const double ang = 2.0 * std::numbers::pi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        const std::size_t half = len / 2;
        std::vector<cplx> tw(half);
        for (std::size_t k = 0; k < half; ++k)
            tw[k] = std::polar(1.0, ang * static_cast<double>(k));
        for (std::size_t i = 0; i < n; i += len)
        {
            for (std::size_t k = 0; k < half; ++k)
            {
                const cplx u = a[i + k];
                const cplx v = a[i + k + half] * tw[k];
                a[i + k]        = u + v;
                a[i + k + half] = u - v;
            }
        }
    }
    if (inverse)
        for (auto& x : a)
            x /= static_cast<double>(n);
}

// DFT of arbitrary length: radix-2 directly, Bluestein's chirp-z otherwise.
inline std::vector<cplx> dft(std::span<const double> x)
{
    const std::size_t n = x.size();
    if (is_pow2(n))
    {
        std::vector<cplx> a(x.begin(), x.end());
        fft_pow2(a);
        return a;
    }
    std::size_t m = 1;
    while (m < 2 * n - 1)
        m <<= 1;
    std::vector<cplx> chirp(n);
    for (std::size_t k = 0; k < n; ++k)
    {
        // k^2 mod 2n keeps the angle argument small for long inputs
        const auto k2 = static_cast<double>((static_cast<unsigned long long>(k) * k) % (2 * n));
        chirp[k] = std::polar(1.0, -std::numbers::pi * k2 / static_cast<double>(n));
    }
    std::vector<cplx> a(m), b(m);
    for (std::size_t k = 0; k < n; ++k)
        a[k] = x[k] * chirp[k];
    b[0] = std::conj(chirp[0]);
    for (std::size_t k = 1; k < n; ++k)
        b[k] = b[m - k] = std::conj(chirp[k]);
    fft_pow2(a);
    fft_pow2(b);
    for (std::size_t k = 0; k < m; ++k)
        a[k] *= b[k];
    fft_pow2(a, true);
    std::vector<cplx> out(n);
    for (std::size_t k = 0; k < n; ++k)
        out[k] = a[k] * chirp[k];
    return out;
}

} // namespace detail

struct Band
{
    double low  = 0.0;
    double high = 0.0;
    std::string name;

    void validate(double fs) const
    {
        if (!(low >= 0.0 && low < high && high < fs / 2.0))
            throw Error(ErrorCode::InvalidArgument,
                        "band '" + name + "' [" + std::to_string(low) + ", " +
                            std::to_string(high) + "] invalid for fs " + std::to_string(fs));
    }
};

inline Band mu_band() { return {8.0, 12.0, "mu"}; }
inline Band beta_band() { return {13.0, 30.0, "beta"}; }

// One-sided power spectral density on bins k = 0..floor(N/2).
struct Spectrum
{
    std::vector<double> frequencies;
    std::vector<double> power;
    double df = 0.0;

    double total() const noexcept
    {
        double s = 0.0;
        for (double p : power)
            s += p;
        return s * df;
    }

    // Sum of power*df over bins with low <= f <= high.
    double in_range(double low, double high) const noexcept
    {
        double s = 0.0;
        for (std::size_t k = 0; k < power.size(); ++k)
            if (frequencies[k] >= low && frequencies[k] <= high)
                s += power[k];
        return s * df;
    }
};

//
// Rectangular-window periodogram |X_k|^2 / (fs*N), one-sided with interior
// bins doubled, so that sum(power)*df equals mean(x^2).
//
inline Spectrum periodogram(std::span<const double> signal, double fs)
{
    const std::size_t n = signal.size();
    if (n < 8)
        throw Error(ErrorCode::TooShort, "periodogram needs at least 8 samples, got " +
                                             std::to_string(n));
    if (!(fs > 0.0))
        throw Error(ErrorCode::InvalidArgument, "sample rate must be positive");

    const auto spectrum = detail::dft(signal);
    const std::size_t bins = n / 2 + 1;
    const double nd = static_cast<double>(n);
    Spectrum s;
    s.df = fs / nd;
    s.frequencies.resize(bins);
    s.power.resize(bins);
    for (std::size_t k = 0; k < bins; ++k)
    {
        s.frequencies[k] = static_cast<double>(k) * s.df;
        double p = std::norm(spectrum[k]) / (fs * nd);
        const bool nyquist = (n % 2 == 0) && k == n / 2;
        if (k != 0 && !nyquist)
            p *= 2.0;
        s.power[k] = p;
    }
    return s;
}

inline double band_power(const Spectrum& spectrum, const Band& band)
{
    return spectrum.in_range(band.low, band.high);
}

inline double band_power(std::span<const double> signal, const Band& band, double fs)
{
    band.validate(fs);
    return band_power(periodogram(signal, fs), band);
}

inline double energy(std::span<const double> signal)
{
    if (signal.empty())
        throw Error(ErrorCode::Empty, "energy of an empty signal");
    double e = 0.0;
    for (double x : signal)
        e += x * x;
    return e;
}

// 100*(active - reference)/reference: negative is ERD, positive ERS.
inline double erd_percentage(double active_power, double reference_power)
{
    if (!(reference_power > 0.0))
        throw Error(ErrorCode::ZeroReference, "reference power must be positive");
    return 100.0 * (active_power - reference_power) / reference_power;
}

//
// Per-channel features laid out as
//   [band0 ch0..chN-1, band1 ch0..chN-1, ..., energy ch0..chN-1].
// With the default mu/beta bands this is [mu..., beta..., energy...].
//
struct FeatureVector
{
    std::vector<double> values;
    std::size_t channels = 0;
};

inline FeatureVector extract_features(const Matrix& epoch, double fs,
                                      std::span<const Band> bands)
{
    if (epoch.empty() || static_cast<double>(epoch.cols()) < fs)
        throw Error(ErrorCode::EpochTooShort,
                    "epoch has " + std::to_string(epoch.cols()) + " samples, needs >= 1 s");
    for (const auto& b : bands)
        b.validate(fs);

    const std::size_t nch = epoch.rows();
    FeatureVector fv;
    fv.channels = nch;
    fv.values.assign((bands.size() + 1) * nch, 0.0);
    for (std::size_t ch = 0; ch < nch; ++ch)
    {
        const auto spectrum = periodogram(epoch.row(ch), fs);
        for (std::size_t b = 0; b < bands.size(); ++b)
            fv.values[b * nch + ch] = band_power(spectrum, bands[b]);
        fv.values[bands.size() * nch + ch] = energy(epoch.row(ch));
    }
    return fv;
}

inline FeatureVector extract_features(const Matrix& epoch, double fs)
{
    const Band defaults[] = {mu_band(), beta_band()};
    return extract_features(epoch, fs, defaults);
}

} // namespace resobi

#endif
