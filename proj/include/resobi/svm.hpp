#ifndef RESOBI_SVM_HPP
#define RESOBI_SVM_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "resobi/error.hpp"
#include "resobi/rng.hpp"

namespace resobi
{

enum class KernelType
{
    Linear,
    Rbf,
};

struct Kernel
{
    KernelType type = KernelType::Linear;
    double gamma = 1.0; // rbf only

    static Kernel linear() noexcept { return {}; }
    static Kernel rbf(double gamma) noexcept { return {KernelType::Rbf, gamma}; }

    double operator()(std::span<const double> a, std::span<const double> b) const noexcept
    {
        double s = 0.0;
        if (type == KernelType::Linear)
        {
            for (std::size_t k = 0; k < a.size(); ++k)
                s += a[k] * b[k];
            return s;
        }
        for (std::size_t k = 0; k < a.size(); ++k)
            s += (a[k] - b[k]) * (a[k] - b[k]);
        return std::exp(-gamma * s);
    }
};

inline std::string_view to_string(KernelType k) noexcept
{
    return k == KernelType::Linear ? "linear" : "rbf";
}

struct LabeledDataset
{
    std::vector<std::vector<double>> vectors;
    std::vector<int> labels; // left = -1, right = +1
    std::vector<std::string> provenance;

    std::size_t size() const noexcept { return vectors.size(); }
    std::size_t dimension() const noexcept { return vectors.empty() ? 0 : vectors.front().size(); }

    void validate() const
    {
        if (vectors.empty())
            throw Error(ErrorCode::Empty, "dataset is empty");
        if (labels.size() != vectors.size())
            throw Error(ErrorCode::DimensionMismatch, "label count != vector count");
        for (const auto& v : vectors)
        {
            if (v.size() != dimension())
                throw Error(ErrorCode::DimensionMismatch, "feature vectors differ in length");
            for (double x : v)
                if (!std::isfinite(x))
                    throw Error(ErrorCode::InvalidArgument, "non-finite feature value");
        }
        for (int y : labels)
            if (y != 1 && y != -1)
                throw Error(ErrorCode::InvalidArgument, "labels must be -1 or +1");
    }
};

// Per-feature z-scoring with statistics from the training set only.
struct Standardizer
{
    std::vector<double> mean;
    std::vector<double> stddev;   // 1 for constant features
    std::vector<bool> constant;

    std::vector<double> apply(std::span<const double> x) const
    {
        if (x.size() != mean.size())
            throw Error(ErrorCode::DimensionMismatch,
                        "expected " + std::to_string(mean.size()) + " features, got " +
                            std::to_string(x.size()));
        std::vector<double> z(x.size());
        for (std::size_t k = 0; k < x.size(); ++k)
            z[k] = (x[k] - mean[k]) / stddev[k];
        return z;
    }
};

inline Standardizer fit_standardizer(const LabeledDataset& data)
{
    if (data.vectors.empty())
        throw Error(ErrorCode::Empty, "cannot standardize an empty dataset");
    const std::size_t d = data.dimension();
    const double n = static_cast<double>(data.size());
    Standardizer st;
    st.mean.assign(d, 0.0);
    st.stddev.assign(d, 0.0);
    st.constant.assign(d, false);
    for (const auto& v : data.vectors)
        for (std::size_t k = 0; k < d; ++k)
            st.mean[k] += v[k];
    for (auto& m : st.mean)
        m /= n;
    for (const auto& v : data.vectors)
        for (std::size_t k = 0; k < d; ++k)
            st.stddev[k] += (v[k] - st.mean[k]) * (v[k] - st.mean[k]);
    for (std::size_t k = 0; k < d; ++k)
    {
        st.stddev[k] = std::sqrt(st.stddev[k] / n);
        if (st.stddev[k] <= 1e-12 * std::max(1.0, std::abs(st.mean[k])))
        {
            st.stddev[k]   = 1.0;
            st.constant[k] = true;
            st.mean[k]     = data.vectors.front()[k];
        }
    }
    return st;
}

inline std::pair<Standardizer, LabeledDataset> standardize_fit_apply(const LabeledDataset& train)
{
    Standardizer st = fit_standardizer(train);
    LabeledDataset out = train;
    for (auto& v : out.vectors)
        v = st.apply(v);
    return {std::move(st), std::move(out)};
}

struct SvmOptions
{
    double c = 1.0;
    Kernel kernel;
    double tol = 1e-3;
    std::size_t max_passes = 50;
    std::uint64_t seed = 0;
    std::size_t max_total_passes = 10000;
};

struct SvmModel
{
    Kernel kernel;
    double c = 1.0;
    double bias = 0.0;
    std::vector<double> alphas;
    std::vector<std::vector<double>> support_vectors; // standardized
    std::vector<int> support_labels;
    std::vector<std::size_t> support_indices;         // positions in the training set
    Standardizer standardizer;
    bool converged = true;

    std::size_t dimension() const noexcept { return standardizer.mean.size(); }

    double decision_standardized(std::span<const double> z) const noexcept
    {
        double f = bias;
        for (std::size_t s = 0; s < alphas.size(); ++s)
            f += alphas[s] * support_labels[s] * kernel(support_vectors[s], z);
        return f;
    }
};

struct Prediction
{
    int label = 1;
    double decision = 0.0;
};

inline Prediction svm_predict(const SvmModel& model, std::span<const double> x)
{
    if (x.size() != model.dimension())
        throw Error(ErrorCode::DimensionMismatch,
                    "model expects " + std::to_string(model.dimension()) + " features, got " +
                        std::to_string(x.size()));
    const double f = model.decision_standardized(model.standardizer.apply(x));
    return {f >= 0.0 ? 1 : -1, f};
}

namespace detail
{

class Smo
{
public:
    Smo(const std::vector<std::vector<double>>& z, const std::vector<int>& y, const SvmOptions& opts)
        : z_(z), y_(y), opts_(opts), n_(z.size()), k_(n_ * n_), alpha_(n_, 0.0), f_(n_, 0.0),
          rng_(opts.seed)
    {
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = i; j < n_; ++j)
                k_[i * n_ + j] = k_[j * n_ + i] = opts.kernel(z[i], z[j]);
    }

    // Returns true when a pass over the data changed nothing.
    bool run()
    {
        std::size_t quiet = 0;
        for (std::size_t pass = 0; pass < opts_.max_total_passes; ++pass)
        {
            std::size_t changed = 0;
            for (std::size_t i = 0; i < n_; ++i)
                if (violates(i) && optimize_with_some_j(i))
                    ++changed;
            quiet = changed == 0 ? quiet + 1 : 0;
            if (quiet >= opts_.max_passes)
                return true;
        }
        return false;
    }

    void finalize_bias()
    {
        const double c = opts_.c;
        double free_sum = 0.0;
        std::size_t free_count = 0;
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n_; ++i)
        {
            const double g = f_[i] - b_;
            const double target = y_[i] - g;
            if (alpha_[i] > 1e-8 * c && alpha_[i] < c * (1.0 - 1e-8))
            {
                free_sum += target;
                ++free_count;
            }
            else if ((alpha_[i] <= 1e-8 * c) == (y_[i] > 0))
                lo = std::max(lo, target);
            else
                hi = std::min(hi, target);
        }
        double b;
        if (free_count > 0)
            b = free_sum / static_cast<double>(free_count);
        else if (std::isfinite(lo) && std::isfinite(hi))
            b = 0.5 * (lo + hi);
        else
            b = std::isfinite(lo) ? lo : hi;
        for (auto& f : f_)
            f += b - b_;
        b_ = b;
    }

    bool any_violation() const noexcept
    {
        for (std::size_t i = 0; i < n_; ++i)
            if (violates(i))
                return true;
        return false;
    }

    const std::vector<double>& alpha() const noexcept { return alpha_; }
    double bias() const noexcept { return b_; }

private:
    double kern(std::size_t i, std::size_t j) const noexcept { return k_[i * n_ + j]; }

    bool violates(std::size_t i) const noexcept
    {
        const double r = y_[i] * (f_[i] - y_[i]);
        return (r < -opts_.tol && alpha_[i] < opts_.c) || (r > opts_.tol && alpha_[i] > 0.0);
    }

    // Random second index first; if that pair cannot move, the remaining
    // indices are tried in cyclic order from there.
    bool optimize_with_some_j(std::size_t i)
    {
        const std::size_t start = static_cast<std::size_t>(rng_.below(n_ - 1));
        for (std::size_t step = 0; step + 1 < n_; ++step)
        {
            std::size_t j = (start + step) % (n_ - 1);
            if (j >= i)
                ++j;
            if (take_step(i, j))
                return true;
        }
        return false;
    }

    bool take_step(std::size_t i, std::size_t j)
    {
        const double c  = opts_.c;
        const double yi = y_[i], yj = y_[j];
        const double ei = f_[i] - yi, ej = f_[j] - yj;
        const double ai_old = alpha_[i], aj_old = alpha_[j];
        double lo, hi;
        if (y_[i] != y_[j])
        {
            lo = std::max(0.0, aj_old - ai_old);
            hi = std::min(c, c + aj_old - ai_old);
        }
        else
        {
            lo = std::max(0.0, ai_old + aj_old - c);
            hi = std::min(c, ai_old + aj_old);
        }
        if (hi - lo < 1e-12 * c)
            return false;
        const double eta = 2.0 * kern(i, j) - kern(i, i) - kern(j, j);
        if (eta >= -1e-12)
            return false;
        double aj = std::clamp(aj_old - yj * (ei - ej) / eta, lo, hi);
        if (std::abs(aj - aj_old) < 1e-10 * (aj + aj_old + 1e-10))
            return false;
        const double ai = std::clamp(ai_old + yi * yj * (aj_old - aj), 0.0, c);

        const double dai = ai - ai_old, daj = aj - aj_old;
        const double b1 = b_ - ei - yi * dai * kern(i, i) - yj * daj * kern(i, j);
        const double b2 = b_ - ej - yi * dai * kern(i, j) - yj * daj * kern(j, j);
        double b;
        if (ai > 0.0 && ai < c)
            b = b1;
        else if (aj > 0.0 && aj < c)
            b = b2;
        else
            b = 0.5 * (b1 + b2);

        for (std::size_t k = 0; k < n_; ++k)
            f_[k] += yi * dai * kern(i, k) + yj * daj * kern(j, k) + (b - b_);
        alpha_[i] = ai;
        alpha_[j] = aj;
        b_ = b;
        return true;
    }

    const std::vector<std::vector<double>>& z_;
    const std::vector<int>& y_;
    SvmOptions opts_;
    std::size_t n_;
    std::vector<double> k_;
    std::vector<double> alpha_;
    std::vector<double> f_; // decision values on the training set
    double b_ = 0.0;
    Rng rng_;
};

} // namespace detail

//
// Binary soft-margin SVM trained with simplified SMO on standardized
// features. The second multiplier of each pair is drawn at random (seeded);
// when that pair cannot make progress the other indices are tried in turn,
// so termination means no violating pair can be improved. The bias is then
// re-estimated from all free support vectors.
//
inline SvmModel svm_train(const LabeledDataset& data, const SvmOptions& opts = {})
{
    data.validate();
    const bool has_pos = std::find(data.labels.begin(), data.labels.end(), 1) != data.labels.end();
    const bool has_neg = std::find(data.labels.begin(), data.labels.end(), -1) != data.labels.end();
    if (!(has_pos && has_neg))
        throw Error(ErrorCode::SingleClass, "training data contains a single class");
    if (!(opts.c > 0.0))
        throw Error(ErrorCode::InvalidArgument, "C must be positive");
    if (opts.max_passes == 0)
        throw Error(ErrorCode::InvalidArgument, "max_passes must be at least 1");
    if (opts.kernel.type == KernelType::Rbf && !(opts.kernel.gamma > 0.0))
        throw Error(ErrorCode::InvalidArgument, "rbf gamma must be positive");

    auto [st, z] = standardize_fit_apply(data);
    detail::Smo smo(z.vectors, z.labels, opts);
    bool converged = smo.run();
    smo.finalize_bias();
    // Re-estimating the bias can push a few points back over the tolerance;
    // resume from there until the final model itself satisfies KKT.
    for (int round = 0; converged && round < 20 && smo.any_violation(); ++round)
    {
        converged = smo.run();
        smo.finalize_bias();
    }

    SvmModel model;
    model.kernel = opts.kernel;
    model.c = opts.c;
    model.bias = smo.bias();
    model.standardizer = std::move(st);
    model.converged = converged;
    const auto& alpha = smo.alpha();
    for (std::size_t i = 0; i < alpha.size(); ++i)
    {
        if (alpha[i] <= 0.0)
            continue;
        model.alphas.push_back(alpha[i]);
        model.support_vectors.push_back(z.vectors[i]);
        model.support_labels.push_back(z.labels[i]);
        model.support_indices.push_back(i);
    }
    return model;
}

//
// Largest KKT residual of `model` over the data it was trained on:
//   alpha = 0      needs y f >= 1
//   0 < alpha < C  needs y f == 1
//   alpha = C      needs y f <= 1
//
inline double max_kkt_violation(const SvmModel& model, const LabeledDataset& train)
{
    std::vector<double> alpha(train.size(), 0.0);
    for (std::size_t s = 0; s < model.alphas.size(); ++s)
        alpha[model.support_indices[s]] = model.alphas[s];
    double worst = 0.0;
    for (std::size_t i = 0; i < train.size(); ++i)
    {
        const double yf = train.labels[i] * svm_predict(model, train.vectors[i]).decision;
        double v;
        if (alpha[i] <= 1e-12 * model.c)
            v = std::max(0.0, 1.0 - yf);
        else if (alpha[i] >= model.c * (1.0 - 1e-12))
            v = std::max(0.0, yf - 1.0);
        else
            v = std::abs(yf - 1.0);
        worst = std::max(worst, v);
    }
    return worst;
}

struct CrossValidation
{
    double mean_accuracy = 0.0;
    std::vector<double> fold_accuracies;
    std::vector<std::size_t> fold_of; // per sample
    std::vector<int> predicted;       // out-of-fold, per sample
    std::vector<double> decision;     // out-of-fold, per sample
};

//
// Stratified k-fold cross-validation: each class is shuffled with the seed and
// dealt round-robin into folds. The standardizer is refit on every training
// fold.
//
inline CrossValidation cross_validate(const LabeledDataset& data, std::size_t folds,
                                      const SvmOptions& opts = {})
{
    data.validate();
    if (folds < 2 || folds > data.size())
        throw Error(ErrorCode::TooFewSamples, std::to_string(data.size()) +
                                                  " samples cannot fill " + std::to_string(folds) +
                                                  " folds");
    Rng rng(opts.seed);
    CrossValidation cv;
    cv.fold_of.assign(data.size(), 0);
    cv.predicted.assign(data.size(), 0);
    cv.decision.assign(data.size(), 0.0);

    std::size_t dealt = 0;
    for (int cls : {1, -1})
    {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < data.size(); ++i)
            if (data.labels[i] == cls)
                idx.push_back(i);
        rng.shuffle(idx);
        for (auto i : idx)
            cv.fold_of[i] = dealt++ % folds;
    }

    for (std::size_t f = 0; f < folds; ++f)
    {
        LabeledDataset train;
        std::vector<std::size_t> test;
        for (std::size_t i = 0; i < data.size(); ++i)
        {
            if (cv.fold_of[i] == f)
            {
                test.push_back(i);
                continue;
            }
            train.vectors.push_back(data.vectors[i]);
            train.labels.push_back(data.labels[i]);
        }
        SvmOptions fold_opts = opts;
        fold_opts.seed = Rng::derive(opts.seed, f);
        const SvmModel model = svm_train(train, fold_opts);
        std::size_t correct = 0;
        for (auto i : test)
        {
            const auto p = svm_predict(model, data.vectors[i]);
            cv.predicted[i] = p.label;
            cv.decision[i]  = p.decision;
            correct += p.label == data.labels[i] ? 1 : 0;
        }
        cv.fold_accuracies.push_back(static_cast<double>(correct) / static_cast<double>(test.size()));
    }
    double sum = 0.0;
    for (double a : cv.fold_accuracies)
        sum += a;
    cv.mean_accuracy = sum / static_cast<double>(folds);
    return cv;
}

} // namespace resobi

#endif
