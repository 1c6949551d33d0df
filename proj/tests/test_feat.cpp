#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "resobi/feat.hpp"

using resobi::Band;
using resobi::Matrix;

namespace
{

constexpr double two_pi = 2.0 * std::numbers::pi;

std::vector<double> tone(double hz, std::size_t n, double fs, double amp = 1.0, double phase = 0.3)
{
    std::vector<double> x(n);
    for (std::size_t t = 0; t < n; ++t)
        x[t] = amp * std::sin(two_pi * hz * static_cast<double>(t) / fs + phase);
    return x;
}

std::vector<double> noise(std::size_t n, std::uint64_t seed)
{
    resobi::Rng rng(seed);
    std::vector<double> x(n);
    for (double& v : x)
        v = rng.normal();
    return x;
}

} // namespace

TEST(Dft, MatchesBruteForceForPowerOfTwoAndOtherLengths)
{
    for (std::size_t n : {8u, 64u, 100u, 125u, 257u, 500u})
    {
        const auto x = noise(n, n);
        const auto fast = resobi::detail::dft(x);
        const auto ref = oracle::brute_dft(x);
        double scale = 0.0;
        for (auto v : ref)
            scale = std::max(scale, std::abs(v));
        for (std::size_t k = 0; k < n; ++k)
            EXPECT_NEAR(std::abs(fast[k] - ref[k]), 0.0, 1e-10 * scale) << "n=" << n << " k=" << k;
    }
}

TEST(Periodogram, ConstantSignalAllAtDc)
{
    const std::vector<double> x(100, 3.0);
    const auto s = resobi::periodogram(x, 250.0);
    EXPECT_NEAR(s.power[0] * s.df, 9.0, 1e-12);
    for (std::size_t k = 1; k < s.power.size(); ++k)
        EXPECT_NEAR(s.power[k], 0.0, 1e-20);
}

TEST(Periodogram, TenHertzSingleBin)
{
    const double fs = 250.0;
    const auto x = tone(10.0, 1000, fs);
    const auto s = resobi::periodogram(x, fs);
    const auto peak = std::max_element(s.power.begin(), s.power.end()) - s.power.begin();
    EXPECT_NEAR(s.frequencies[static_cast<std::size_t>(peak)], 10.0, 1e-12);
    EXPECT_GE(s.power[static_cast<std::size_t>(peak)] * s.df / s.total(), 0.999);
}

TEST(Periodogram, ParsevalOnNoise)
{
    for (std::size_t n : {999u, 1000u, 1024u})
    {
        const auto x = noise(n, 7 + n);
        double ms = 0.0;
        for (double v : x)
            ms += v * v;
        ms /= static_cast<double>(n);
        EXPECT_NEAR(resobi::periodogram(x, 250.0).total(), ms, 1e-6 * ms);
    }
}

TEST(Periodogram, TooShort)
{
    const std::vector<double> x(7, 1.0);
    try
    {
        resobi::periodogram(x, 250.0);
        FAIL();
    }
    catch (const resobi::Error& e)
    {
        EXPECT_EQ(e.code(), resobi::ErrorCode::TooShort);
    }
}

TEST(BandPower, UnitSinusoidMuAndBeta)
{
    const double fs = 250.0;
    const auto x = tone(10.0, 1000, fs);
    // analytic mean square of a unit sinusoid, cross-checked by direct sum
    double ms = 0.0;
    for (double v : x)
        ms += v * v;
    ms /= 1000.0;
    EXPECT_NEAR(ms, 0.5, 1e-9);
    EXPECT_NEAR(resobi::band_power(x, resobi::mu_band(), fs), 0.5, 0.01);
    EXPECT_LE(resobi::band_power(x, resobi::beta_band(), fs), 0.001);
    const std::vector<double> zero(1000, 0.0);
    EXPECT_EQ(resobi::band_power(zero, resobi::mu_band(), fs), 0.0);
}

TEST(BandPower, DisjointPartitionSumsToTotal)
{
    const double fs = 250.0;
    const auto x = noise(1000, 3);
    const auto s = resobi::periodogram(x, fs);
    // bin spacing 0.25 Hz; edges fall between bins
    const double edges[] = {0.0, 3.9, 7.9, 12.1, 29.9, 60.1, 125.0};
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < std::size(edges); ++i)
        sum += s.in_range(i == 0 ? edges[i] : edges[i] + 1e-9, edges[i + 1]);
    EXPECT_NEAR(sum, s.total(), 1e-6 * s.total());
}

TEST(BandPower, InvalidBand)
{
    const auto x = tone(10.0, 500, 250.0);
    EXPECT_THROW(resobi::band_power(x, Band{12.0, 8.0, "bad"}, 250.0), resobi::Error);
    EXPECT_THROW(resobi::band_power(x, Band{100.0, 130.0, "bad"}, 250.0), resobi::Error);
}

TEST(Energy, Cases)
{
    const std::vector<double> a{1, 2, 3};
    EXPECT_EQ(resobi::energy(a), 14.0);
    const std::vector<double> z(5, 0.0);
    EXPECT_EQ(resobi::energy(z), 0.0);
    try
    {
        resobi::energy(std::vector<double>{});
        FAIL();
    }
    catch (const resobi::Error& e)
    {
        EXPECT_EQ(e.code(), resobi::ErrorCode::Empty);
    }
}

TEST(ErdPercentage, FixedCasesAreExact)
{
    EXPECT_EQ(resobi::erd_percentage(10, 10), 0.0);
    EXPECT_EQ(resobi::erd_percentage(5, 10), -50.0);
    EXPECT_EQ(resobi::erd_percentage(14, 10), 40.0);
}

TEST(ErdPercentage, MonotoneAndZeroReferenceRejected)
{
    double prev = -1e300;
    for (double a = 0.0; a < 30.0; a += 0.37)
    {
        const double v = resobi::erd_percentage(a, 10.0);
        EXPECT_GT(v, prev);
        EXPECT_EQ(v == 0.0, a == 10.0);
        prev = v;
    }
    try
    {
        resobi::erd_percentage(1.0, 0.0);
        FAIL();
    }
    catch (const resobi::Error& e)
    {
        EXPECT_EQ(e.code(), resobi::ErrorCode::ZeroReference);
    }
}

TEST(ExtractFeatures, SingleChannelTone)
{
    const double fs = 250.0;
    const auto x = tone(10.0, 500, fs);
    const Matrix epoch(1, 500, x);
    const auto fv = resobi::extract_features(epoch, fs);
    ASSERT_EQ(fv.values.size(), 3u);
    EXPECT_NEAR(fv.values[0], 0.5, 0.01);
    EXPECT_LE(fv.values[1], 0.001);
    EXPECT_NEAR(fv.values[2], resobi::energy(x), 1e-12);
}

TEST(ExtractFeatures, ZeroEpoch)
{
    const auto fv = resobi::extract_features(Matrix(3, 300), 250.0);
    for (double v : fv.values)
        EXPECT_EQ(v, 0.0);
}

TEST(ExtractFeatures, ChannelPermutationPermutesBlocks)
{
    const double fs = 250.0;
    Matrix e(3, 400);
    for (std::size_t c = 0; c < 3; ++c)
    {
        const auto x = noise(400, 40 + c);
        std::copy(x.begin(), x.end(), e.row(c).begin());
    }
    const std::size_t perm[] = {2, 0, 1};
    Matrix p(3, 400);
    for (std::size_t c = 0; c < 3; ++c)
        std::copy(e.row(perm[c]).begin(), e.row(perm[c]).end(), p.row(c).begin());
    const auto a = resobi::extract_features(e, fs);
    const auto b = resobi::extract_features(p, fs);
    for (std::size_t block = 0; block < 3; ++block)
        for (std::size_t c = 0; c < 3; ++c)
            EXPECT_EQ(b.values[block * 3 + c], a.values[block * 3 + perm[c]]);
}

TEST(ExtractFeatures, TimeReversalInvariance)
{
    const double fs = 250.0;
    Matrix e(2, 500), r(2, 500);
    for (std::size_t c = 0; c < 2; ++c)
    {
        const auto x = noise(500, 90 + c);
        for (std::size_t t = 0; t < 500; ++t)
        {
            e(c, t) = x[t];
            r(c, t) = x[499 - t];
        }
    }
    const auto a = resobi::extract_features(e, fs);
    const auto b = resobi::extract_features(r, fs);
    for (std::size_t i = 0; i < a.values.size(); ++i)
        EXPECT_NEAR(a.values[i], b.values[i], 1e-9 * std::max(1.0, std::abs(a.values[i])));
}

TEST(ExtractFeatures, ShortEpochRejected)
{
    try
    {
        resobi::extract_features(Matrix(2, 100), 250.0);
        FAIL();
    }
    catch (const resobi::Error& e)
    {
        EXPECT_EQ(e.code(), resobi::ErrorCode::EpochTooShort);
    }
}
