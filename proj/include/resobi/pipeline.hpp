#ifndef RESOBI_PIPELINE_HPP
#define RESOBI_PIPELINE_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "resobi/bss.hpp"
#include "resobi/error.hpp"
#include "resobi/feat.hpp"
#include "resobi/io.hpp"
#include "resobi/svm.hpp"
#include "resobi/synthgen.hpp"

namespace resobi
{

enum class MethodChoice
{
    Jacobi,
    Schur,
    Both,
};

inline MethodChoice parse_method_choice(std::string_view s)
{
    if (s == "both")
        return MethodChoice::Both;
    return parse_method(s) == Method::Jacobi ? MethodChoice::Jacobi : MethodChoice::Schur;
}

inline std::string_view to_string(MethodChoice m) noexcept
{
    switch (m)
    {
        case MethodChoice::Jacobi: return "jacobi";
        case MethodChoice::Schur:  return "schur";
        case MethodChoice::Both:   return "both";
    }
    return "unknown";
}

inline std::vector<Method> methods_of(MethodChoice m)
{
    switch (m)
    {
        case MethodChoice::Jacobi: return {Method::Jacobi};
        case MethodChoice::Schur:  return {Method::Schur};
        case MethodChoice::Both:   return {Method::Schur, Method::Jacobi};
    }
    return {};
}

struct PipelineConfig
{
    std::vector<std::size_t> lags = default_lags();
    MethodChoice method = MethodChoice::Schur;
    std::vector<Band> bands = {mu_band(), beta_band()};
    ArtifactCriteria criteria;
    SvmOptions svm;
    std::uint64_t seed = 0;
    std::size_t folds = 5;

    // Checks everything that does not depend on the data; bands are checked
    // against the sample rate once it is known.
    void validate() const
    {
        auto fail = [](const std::string& why) { throw Error(ErrorCode::InvalidArgument, why); };
        if (lags.empty())
            fail("at least one lag is required");
        if (bands.empty())
            fail("at least one band is required");
        if (!(svm.c > 0.0))
            fail("svm C must be positive");
        if (svm.kernel.type == KernelType::Rbf && !(svm.kernel.gamma > 0.0))
            fail("rbf gamma must be positive");
        if (!(svm.tol > 0.0))
            fail("svm tolerance must be positive");
        if (folds < 2)
            fail("at least 2 folds are required");
        if (!(criteria.low_freq_fraction >= 0.0 && criteria.low_freq_fraction <= 1.0 &&
              criteria.line_fraction >= 0.0 && criteria.line_fraction <= 1.0))
            fail("artifact fractions must lie in [0, 1]");
        if (!(criteria.line_low_hz < criteria.line_high_hz))
            fail("line band must have low < high");
    }

    void validate(double fs) const
    {
        validate();
        for (const auto& b : bands)
            b.validate(fs);
    }
};

inline nlohmann::json config_to_json(const PipelineConfig& c)
{
    nlohmann::json bands = nlohmann::json::array();
    for (const auto& b : c.bands)
        bands.push_back({{"name", b.name}, {"low", b.low}, {"high", b.high}});
    nlohmann::json kernel = {{"type", std::string(to_string(c.svm.kernel.type))}};
    if (c.svm.kernel.type == KernelType::Rbf)
        kernel["gamma"] = c.svm.kernel.gamma;
    return {{"format_version", io::format_version},
            {"lags", c.lags},
            {"method", std::string(to_string(c.method))},
            {"bands", bands},
            {"artifact_criteria",
             {{"low_freq_hz", c.criteria.low_freq_hz},
              {"low_freq_fraction", c.criteria.low_freq_fraction},
              {"line_low_hz", c.criteria.line_low_hz},
              {"line_high_hz", c.criteria.line_high_hz},
              {"line_fraction", c.criteria.line_fraction}}},
            {"svm", {{"c", c.svm.c}, {"kernel", kernel}, {"tol", c.svm.tol}, {"max_passes", c.svm.max_passes}}},
            {"seed", c.seed},
            {"folds", c.folds}};
}

// Missing keys keep their defaults.
inline PipelineConfig config_from_json(const nlohmann::json& j)
{
    PipelineConfig c;
    try
    {
        c.lags = j.value("lags", c.lags);
        if (j.contains("method"))
            c.method = parse_method_choice(j.at("method").get<std::string>());
        if (j.contains("bands"))
        {
            c.bands.clear();
            for (const auto& b : j.at("bands"))
                c.bands.push_back({b.at("low").get<double>(), b.at("high").get<double>(),
                                   b.value("name", std::string())});
        }
        if (j.contains("artifact_criteria"))
        {
            const auto& a = j.at("artifact_criteria");
            c.criteria.low_freq_hz       = a.value("low_freq_hz", c.criteria.low_freq_hz);
            c.criteria.low_freq_fraction = a.value("low_freq_fraction", c.criteria.low_freq_fraction);
            c.criteria.line_low_hz       = a.value("line_low_hz", c.criteria.line_low_hz);
            c.criteria.line_high_hz      = a.value("line_high_hz", c.criteria.line_high_hz);
            c.criteria.line_fraction     = a.value("line_fraction", c.criteria.line_fraction);
        }
        if (j.contains("svm"))
        {
            const auto& s = j.at("svm");
            c.svm.c          = s.value("c", c.svm.c);
            c.svm.tol        = s.value("tol", c.svm.tol);
            c.svm.max_passes = s.value("max_passes", c.svm.max_passes);
            if (s.contains("kernel"))
            {
                const auto& k = s.at("kernel");
                const auto type = k.at("type").get<std::string>();
                if (type == "rbf")
                    c.svm.kernel = Kernel::rbf(k.value("gamma", 1.0));
                else if (type == "linear")
                    c.svm.kernel = Kernel::linear();
                else
                    throw Error(ErrorCode::InvalidArgument, "unknown kernel '" + type + "'");
            }
        }
        c.seed  = j.value("seed", c.seed);
        c.folds = j.value("folds", c.folds);
    }
    catch (const nlohmann::json::exception& e)
    {
        throw Error(ErrorCode::ParseError, std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

struct TrialOutcome
{
    std::size_t index = 0;
    Label label = Label::Left;
    int predicted = 0;
    double decision = 0.0;
    std::size_t fold = 0;
    std::vector<double> mu_erd_percent; // per channel, imagery vs. baseline
    double mean_mu_erd_percent = 0.0;
};

struct PipelineResult
{
    Method method = Method::Schur;
    std::vector<TrialOutcome> trials;
    double accuracy = 0.0;
    std::vector<double> fold_accuracies;
    std::vector<std::size_t> removed_components;
    double separation_seconds = 0.0;
    std::vector<Warning> warnings;
};

namespace detail
{

template <typename F>
decltype(auto) stage(std::string_view name, F&& f)
{
    try
    {
        return f();
    }
    catch (const Error& e)
    {
        throw e.with_stage(name);
    }
}

} // namespace detail

// Per-trial feature vectors from the imagery windows of `rec`.
inline LabeledDataset trial_features(const Recording& rec, std::span<const Trial> trials,
                                     std::span<const Band> bands)
{
    LabeledDataset data;
    for (std::size_t i = 0; i < trials.size(); ++i)
    {
        const auto& t = trials[i];
        data.vectors.push_back(extract_features(rec.slice(t.start, t.end), rec.sample_rate(), bands).values);
        data.labels.push_back(label_sign(t.label));
        data.provenance.push_back(std::to_string(i));
    }
    return data;
}

inline std::vector<std::string> feature_names(std::span<const Band> bands, std::size_t channels)
{
    std::vector<std::string> names;
    for (const auto& b : bands)
        for (std::size_t c = 0; c < channels; ++c)
            names.push_back(b.name + "_ch" + std::to_string(c));
    for (std::size_t c = 0; c < channels; ++c)
        names.push_back("energy_ch" + std::to_string(c));
    return names;
}

//
// Motor-imagery pipeline for one separation method:
//   separation -> artifact removal -> per-trial features -> cross-validated SVM.
// Every error leaving here names the stage it came from.
//
inline PipelineResult run_pipeline(const PipelineConfig& cfg, Method method, const TrialSet& ts)
{
    detail::stage("config", [&] { cfg.validate(ts.recording.sample_rate()); });
    if (ts.trials.empty())
        throw Error(ErrorCode::Empty, "dataset has no trials").with_stage("load");

    PipelineResult out;
    out.method = method;
    const double fs = ts.recording.sample_rate();

    SobiOptions so;
    so.lags   = cfg.lags;
    so.method = method;
    so.seed   = cfg.seed;
    const SeparationResult sep = detail::stage("separation", [&] { return sobi(ts.recording, so); });
    out.separation_seconds = sep.elapsed_seconds;
    out.warnings = sep.diagnostics.warnings;

    const Recording cleaned = detail::stage("artifact_removal", [&] {
        out.removed_components = flag_artifact_components(sep, fs, cfg.criteria);
        return remove_components(sep, out.removed_components);
    });

    const LabeledDataset features = detail::stage("features", [&] {
        auto data = trial_features(cleaned, ts.trials, cfg.bands);
        const Band& ref = cfg.bands.front();
        for (std::size_t i = 0; i < ts.trials.size(); ++i)
        {
            const auto& t = ts.trials[i];
            const Matrix active   = cleaned.slice(t.start, t.end);
            const Matrix baseline = cleaned.slice(t.baseline_start, t.baseline_end);
            TrialOutcome o;
            o.index = i;
            o.label = t.label;
            double sum = 0.0;
            for (std::size_t c = 0; c < cleaned.channels(); ++c)
            {
                const double erd = erd_percentage(band_power(active.row(c), ref, fs),
                                                  band_power(baseline.row(c), ref, fs));
                o.mu_erd_percent.push_back(erd);
                sum += erd;
            }
            o.mean_mu_erd_percent = sum / static_cast<double>(cleaned.channels());
            out.trials.push_back(std::move(o));
        }
        return data;
    });

    detail::stage("classification", [&] {
        SvmOptions svm = cfg.svm;
        svm.seed = Rng::derive(cfg.seed, 7);
        const auto cv = cross_validate(features, cfg.folds, svm);
        out.accuracy = cv.mean_accuracy;
        out.fold_accuracies = cv.fold_accuracies;
        for (std::size_t i = 0; i < out.trials.size(); ++i)
        {
            out.trials[i].predicted = cv.predicted[i];
            out.trials[i].decision  = cv.decision[i];
            out.trials[i].fold      = cv.fold_of[i];
        }
    });
    return out;
}

inline std::vector<PipelineResult> run_pipeline(const PipelineConfig& cfg, const std::filesystem::path& dataset)
{
    const TrialSet ts = detail::stage("load", [&] { return io::read_trialset(dataset); });
    std::vector<PipelineResult> results;
    for (auto m : methods_of(cfg.method))
        results.push_back(run_pipeline(cfg, m, ts));
    return results;
}

inline nlohmann::json pipeline_result_to_json(const PipelineResult& r)
{
    nlohmann::json trials = nlohmann::json::array();
    for (const auto& t : r.trials)
        trials.push_back({{"trial", t.index},
                          {"label", std::string(to_string(t.label))},
                          {"predicted", t.predicted < 0 ? "left" : "right"},
                          {"decision", t.decision},
                          {"fold", t.fold},
                          {"mu_erd_percent", t.mu_erd_percent},
                          {"mean_mu_erd_percent", t.mean_mu_erd_percent}});
    nlohmann::json warnings = nlohmann::json::array();
    for (auto w : r.warnings)
        warnings.push_back(std::string(to_string(w)));
    return {{"method", std::string(to_string(r.method))},
            {"accuracy", r.accuracy},
            {"fold_accuracies", r.fold_accuracies},
            {"removed_components", r.removed_components},
            {"separation_seconds", r.separation_seconds},
            {"warnings", warnings},
            {"trials", trials}};
}

} // namespace resobi

#endif
