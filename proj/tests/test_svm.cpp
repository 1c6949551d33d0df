#include <gtest/gtest.h>

#include <cmath>

#include "resobi/rng.hpp"
#include "resobi/svm.hpp"

using resobi::LabeledDataset;
using resobi::SvmOptions;

namespace
{

LabeledDataset separable4()
{
    return {{{0, 0}, {2, 2}, {0, 1}, {2, 3}}, {-1, 1, -1, 1}, {}};
}

LabeledDataset xor4()
{
    return {{{0, 0}, {1, 1}, {0, 1}, {1, 0}}, {-1, -1, 1, 1}, {}};
}

// Two Gaussian blobs far apart in 3-D.
LabeledDataset blobs(std::size_t per_class, double gap, std::uint64_t seed)
{
    resobi::Rng rng(seed);
    LabeledDataset d;
    for (std::size_t i = 0; i < 2 * per_class; ++i)
    {
        const int y = i % 2 ? 1 : -1;
        d.vectors.push_back({y * gap + rng.normal(), rng.normal() * 3.0, 100.0 + rng.normal()});
        d.labels.push_back(y);
    }
    return d;
}

double training_accuracy(const resobi::SvmModel& m, const LabeledDataset& d)
{
    std::size_t ok = 0;
    for (std::size_t i = 0; i < d.size(); ++i)
        ok += resobi::svm_predict(m, d.vectors[i]).label == d.labels[i];
    return static_cast<double>(ok) / static_cast<double>(d.size());
}

SvmOptions opts(double c, resobi::Kernel k = resobi::Kernel::linear(), std::uint64_t seed = 1)
{
    SvmOptions o;
    o.c = c;
    o.kernel = k;
    o.seed = seed;
    return o;
}

} // namespace

TEST(Standardize, TwoPointColumnAndConstantColumn)
{
    const LabeledDataset d{{{1.0, 7.0}, {3.0, 7.0}}, {-1, 1}, {}};
    const auto [st, z] = resobi::standardize_fit_apply(d);
    EXPECT_EQ(z.vectors[0][0], -1.0);
    EXPECT_EQ(z.vectors[1][0], 1.0);
    EXPECT_EQ(z.vectors[0][1], 0.0);
    EXPECT_EQ(z.vectors[1][1], 0.0);
    EXPECT_FALSE(st.constant[0]);
    EXPECT_TRUE(st.constant[1]);
}

TEST(SvmTrain, SeparableFixture)
{
    const auto d = separable4();
    const auto m = resobi::svm_train(d, opts(10.0));
    EXPECT_TRUE(m.converged);
    EXPECT_EQ(training_accuracy(m, d), 1.0);
    // boundary lies between the clusters: the midpoint decides near zero
    EXPECT_LT(resobi::svm_predict(m, std::vector<double>{0.0, 0.5}).decision, 0.0);
    EXPECT_GT(resobi::svm_predict(m, std::vector<double>{2.0, 2.5}).decision, 0.0);
    EXPECT_EQ(resobi::svm_predict(m, std::vector<double>{2.2, 3.5}).label, 1);
    EXPECT_LE(resobi::max_kkt_violation(m, d), 1e-3);
}

TEST(SvmTrain, XorNeedsNonlinearKernel)
{
    const auto d = xor4();
    EXPECT_LE(training_accuracy(resobi::svm_train(d, opts(10.0)), d), 0.75);
    const auto rbf = resobi::svm_train(d, opts(10.0, resobi::Kernel::rbf(1.0)));
    EXPECT_EQ(training_accuracy(rbf, d), 1.0);
    EXPECT_LE(resobi::max_kkt_violation(rbf, d), 1e-3);
}

TEST(SvmTrain, SingleClassRejected)
{
    const LabeledDataset d{{{1, 2}, {1, 2}, {3, 4}}, {1, 1, 1}, {}};
    try
    {
        resobi::svm_train(d);
        FAIL();
    }
    catch (const resobi::Error& e)
    {
        EXPECT_EQ(e.code(), resobi::ErrorCode::SingleClass);
    }
}

TEST(SvmTrain, ZeroQuietPassesRejected)
{
    const LabeledDataset d{{{0, 0}, {1, 1}}, {-1, 1}, {}};
    resobi::SvmOptions o;
    o.max_passes = 0;
    EXPECT_THROW(resobi::svm_train(d, o), resobi::Error);
}

TEST(SvmTrain, DualFeasibilityAndKkt)
{
    for (std::uint64_t seed = 1; seed <= 10; ++seed)
    {
        const auto d = blobs(20, 1.0, seed); // overlapping: bounded alphas appear
        for (auto k : {resobi::Kernel::linear(), resobi::Kernel::rbf(0.5)})
        {
            const auto m = resobi::svm_train(d, opts(1.0, k, seed));
            double balance = 0.0;
            for (std::size_t s = 0; s < m.alphas.size(); ++s)
            {
                EXPECT_GE(m.alphas[s], 0.0);
                EXPECT_LE(m.alphas[s], m.c);
                balance += m.alphas[s] * m.support_labels[s];
            }
            EXPECT_NEAR(balance, 0.0, 1e-6);
            EXPECT_LE(resobi::max_kkt_violation(m, d), 1e-3);
        }
    }
}

TEST(SvmTrain, FreeSupportVectorsSitOnTheMargin)
{
    const auto d = blobs(15, 2.0, 4);
    const auto m = resobi::svm_train(d, opts(5.0));
    for (std::size_t s = 0; s < m.alphas.size(); ++s)
        if (m.alphas[s] > 1e-8 && m.alphas[s] < m.c - 1e-8)
            EXPECT_NEAR(std::abs(m.decision_standardized(m.support_vectors[s])), 1.0, 1e-3);
}

TEST(SvmTrain, DeterministicForFixedSeed)
{
    const auto d = blobs(20, 1.0, 8);
    const auto a = resobi::svm_train(d, opts(1.0, resobi::Kernel::linear(), 5));
    const auto b = resobi::svm_train(d, opts(1.0, resobi::Kernel::linear(), 5));
    EXPECT_EQ(a.alphas, b.alphas);
    EXPECT_EQ(a.bias, b.bias);
    EXPECT_EQ(a.support_indices, b.support_indices);
}

TEST(SvmPredict, ScaleInvariance)
{
    const auto d = blobs(20, 1.0, 9);
    for (double c : {0.01, 1000.0})
    {
        LabeledDataset scaled = d;
        for (auto& v : scaled.vectors)
            for (double& x : v)
                x *= c;
        const auto m1 = resobi::svm_train(d, opts(1.0));
        const auto m2 = resobi::svm_train(scaled, opts(1.0));
        for (std::size_t i = 0; i < d.size(); ++i)
            EXPECT_EQ(resobi::svm_predict(m1, d.vectors[i]).label,
                      resobi::svm_predict(m2, scaled.vectors[i]).label);
    }
}

TEST(SvmPredict, TiesGoPositiveAndDimensionChecked)
{
    auto m = resobi::svm_train(separable4(), opts(10.0));
    m.alphas.assign(m.alphas.size(), 0.0);
    m.bias = 0.0;
    EXPECT_EQ(resobi::svm_predict(m, std::vector<double>{1.0, 1.0}).label, 1);
    try
    {
        resobi::svm_predict(m, std::vector<double>{1.0});
        FAIL();
    }
    catch (const resobi::Error& e)
    {
        EXPECT_EQ(e.code(), resobi::ErrorCode::DimensionMismatch);
    }
}

TEST(CrossValidate, SeparableIsPerfect)
{
    const auto cv = resobi::cross_validate(blobs(20, 10.0, 3), 5, opts(1.0));
    EXPECT_EQ(cv.mean_accuracy, 1.0);
    EXPECT_EQ(cv.fold_accuracies.size(), 5u);
}

TEST(CrossValidate, StratifiedFolds)
{
    const auto d = blobs(20, 10.0, 3);
    const auto cv = resobi::cross_validate(d, 5, opts(1.0));
    std::vector<int> pos(5, 0), neg(5, 0);
    for (std::size_t i = 0; i < d.size(); ++i)
        (d.labels[i] > 0 ? pos : neg)[cv.fold_of[i]]++;
    for (std::size_t f = 0; f < 5; ++f)
    {
        EXPECT_EQ(pos[f], 4);
        EXPECT_EQ(neg[f], 4);
    }
}

TEST(CrossValidate, ShuffledLabelsNearChance)
{
    auto d = blobs(20, 0.0, 21);
    resobi::Rng rng(22);
    rng.shuffle(d.labels);
    const auto cv = resobi::cross_validate(d, 5, opts(1.0));
    EXPECT_GE(cv.mean_accuracy, 0.3);
    EXPECT_LE(cv.mean_accuracy, 0.7);
}

TEST(CrossValidate, TooFewSamples)
{
    try
    {
        resobi::cross_validate(separable4(), 5, opts(1.0));
        FAIL();
    }
    catch (const resobi::Error& e)
    {
        EXPECT_EQ(e.code(), resobi::ErrorCode::TooFewSamples);
    }
}
