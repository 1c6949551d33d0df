#ifndef RESOBI_SYNTHGEN_HPP
#define RESOBI_SYNTHGEN_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "resobi/error.hpp"
#include "resobi/matrix.hpp"
#include "resobi/numlin.hpp"
#include "resobi/recording.hpp"
#include "resobi/rng.hpp"

namespace resobi
{

enum class SourceKind
{
    MuRhythm,
    BetaRhythm,
    BroadbandNoise,
    EyeblinkArtifact,
    PowerlineArtifact,
};

inline std::string_view to_string(SourceKind k) noexcept
{
    switch (k)
    {
        case SourceKind::MuRhythm:          return "mu_rhythm";
        case SourceKind::BetaRhythm:        return "beta_rhythm";
        case SourceKind::BroadbandNoise:    return "broadband_noise";
        case SourceKind::EyeblinkArtifact:  return "eyeblink_artifact";
        case SourceKind::PowerlineArtifact: return "powerline_artifact";
    }
    return "unknown";
}

// Imagery class. As a classifier target: left = -1, right = +1.
enum class Label
{
    Left,
    Right,
};

inline int label_sign(Label l) noexcept { return l == Label::Left ? -1 : 1; }
inline std::string_view to_string(Label l) noexcept { return l == Label::Left ? "left" : "right"; }

inline Label parse_label(std::string_view s)
{
    if (s == "left")
        return Label::Left;
    if (s == "right")
        return Label::Right;
    throw Error(ErrorCode::InvalidArgument, "unknown label '" + std::string(s) + "'");
}

//
// One latent source. `frequency` is the oscillation frequency for rhythms and
// mains interference, and the mean blink rate (blinks per second) for eye
// blinks. During imagery windows of trials labelled `modulated_by`, a rhythm
// is scaled by (1 - erd_depth), or by (1 + erd_depth) when `synchronize`.
//
struct SourceSpec
{
    SourceKind kind = SourceKind::MuRhythm;
    double frequency = 10.0;
    double amplitude = 1.0;
    double erd_depth = 0.0;
    std::optional<Label> modulated_by;
    bool synchronize = false;
    double ar1 = 0.5;  // broadband noise: x_t = ar1 x_{t-1} + ar2 x_{t-2} + e_t
    double ar2 = -0.2;

    bool is_rhythm() const noexcept
    {
        return kind == SourceKind::MuRhythm || kind == SourceKind::BetaRhythm;
    }

    void validate(double fs) const
    {
        auto fail = [](const std::string& why) { throw Error(ErrorCode::InvalidSpec, why); };
        if (!(amplitude > 0.0))
            fail("amplitude must be positive");
        if (!(erd_depth >= 0.0 && erd_depth <= 1.0))
            fail("erd_depth must lie in [0, 1]");
        switch (kind)
        {
            case SourceKind::MuRhythm:
            case SourceKind::BetaRhythm:
            case SourceKind::PowerlineArtifact:
                if (!(frequency > 0.0 && frequency < fs / 2.0))
                    fail("frequency " + std::to_string(frequency) + " outside (0, fs/2)");
                break;
            case SourceKind::EyeblinkArtifact:
                if (!(frequency > 0.0 && frequency <= 1.0))
                    fail("blink rate must lie in (0, 1] per second");
                break;
            case SourceKind::BroadbandNoise:
                // stationarity triangle of an AR(2) process
                if (!(std::abs(ar2) < 1.0 && ar1 + ar2 < 1.0 && ar2 - ar1 < 1.0))
                    fail("AR(2) coefficients have a pole on or outside the unit circle");
                break;
        }
    }
};

// Sample windows are half-open [start, end).
struct Trial
{
    std::size_t start = 0;
    std::size_t end   = 0;
    Label label       = Label::Left;
    std::size_t baseline_start = 0;
    std::size_t baseline_end   = 0;
};

inline void validate_schedule(std::span<const Trial> trials, std::size_t samples)
{
    for (std::size_t i = 0; i < trials.size(); ++i)
    {
        const auto& t = trials[i];
        if (!(t.start < t.end && t.end <= samples))
            throw Error(ErrorCode::InvalidSpec, "trial " + std::to_string(i) + " window out of range");
        if (!(t.baseline_start < t.baseline_end && t.baseline_end <= t.start))
            throw Error(ErrorCode::InvalidSpec,
                        "trial " + std::to_string(i) + " baseline must precede its imagery window");
        if (i > 0 && trials[i - 1].end > t.baseline_start)
            throw Error(ErrorCode::InvalidSpec, "trial " + std::to_string(i) + " overlaps its predecessor");
    }
}

// Amplitude multiplier of `spec` over time: 1 outside its imagery windows.
inline std::vector<double> modulation_envelope(const SourceSpec& spec, std::span<const Trial> trials,
                                               std::size_t samples)
{
    std::vector<double> env(samples, 1.0);
    if (!spec.is_rhythm() || !spec.modulated_by)
        return env;
    const double inside = spec.synchronize ? 1.0 + spec.erd_depth : 1.0 - spec.erd_depth;
    for (const auto& t : trials)
        if (t.label == *spec.modulated_by)
            std::fill(env.begin() + static_cast<std::ptrdiff_t>(t.start),
                      env.begin() + static_cast<std::ptrdiff_t>(std::min(t.end, samples)), inside);
    return env;
}

//
// Realizes one row per spec. Source k draws from stream k of `seed`
// (Rng::derive), so identical inputs give bit-identical output.
//   rhythm:    amplitude * envelope(t) * sin(2 pi f t / fs + phase)
//   noise:     AR(2) driven by amplitude * N(0, 1), 200-sample burn-in
//   eyeblink:  0.3 s raised-cosine pulses; onsets spaced (1/rate)*U[0.5, 1.5] s
//   powerline: amplitude * sin(2 pi f t / fs + phase)
//
inline Matrix generate_sources(std::span<const SourceSpec> specs, double duration_s, double fs,
                               std::span<const Trial> trials, std::uint64_t seed)
{
    if (specs.empty())
        throw Error(ErrorCode::InvalidSpec, "no source specs");
    if (!(fs > 0.0))
        throw Error(ErrorCode::InvalidSpec, "sample rate must be positive");
    const double samples_d = std::round(duration_s * fs);
    if (!(samples_d >= 1000.0))
        throw Error(ErrorCode::InvalidSpec, "duration*fs must give at least 1000 samples");
    const auto samples = static_cast<std::size_t>(samples_d);
    for (const auto& s : specs)
        s.validate(fs);
    validate_schedule(trials, samples);

    constexpr double two_pi = 2.0 * std::numbers::pi;
    Matrix out(specs.size(), samples);
    for (std::size_t k = 0; k < specs.size(); ++k)
    {
        const auto& spec = specs[k];
        Rng rng(Rng::derive(seed, k));
        auto row = out.row(k);
        switch (spec.kind)
        {
            case SourceKind::MuRhythm:
            case SourceKind::BetaRhythm:
            case SourceKind::PowerlineArtifact:
            {
                const double phase = rng.uniform(0.0, two_pi);
                const auto env = modulation_envelope(spec, trials, samples);
                const double w = two_pi * spec.frequency / fs;
                for (std::size_t t = 0; t < samples; ++t)
                    row[t] = spec.amplitude * env[t] * std::sin(w * static_cast<double>(t) + phase);
                break;
            }
            case SourceKind::BroadbandNoise:
            {
                double x1 = 0.0, x2 = 0.0;
                for (int b = 0; b < 200; ++b)
                {
                    const double x = spec.ar1 * x1 + spec.ar2 * x2 + spec.amplitude * rng.normal();
                    x2 = x1;
                    x1 = x;
                }
                for (std::size_t t = 0; t < samples; ++t)
                {
                    const double x = spec.ar1 * x1 + spec.ar2 * x2 + spec.amplitude * rng.normal();
                    x2 = x1;
                    x1 = x;
                    row[t] = x;
                }
                break;
            }
            case SourceKind::EyeblinkArtifact:
            {
                const auto width = static_cast<std::size_t>(std::round(0.3 * fs));
                const double mean_gap = fs / spec.frequency;
                double onset = rng.uniform(0.0, mean_gap);
                while (onset < static_cast<double>(samples))
                {
                    const auto begin = static_cast<std::size_t>(onset);
                    for (std::size_t u = 0; u < width && begin + u < samples; ++u)
                        row[begin + u] += spec.amplitude * 0.5 *
                                          (1.0 - std::cos(two_pi * static_cast<double>(u) /
                                                          static_cast<double>(width)));
                    onset += mean_gap * rng.uniform(0.5, 1.5);
                }
                break;
            }
        }
    }
    return out;
}

// Ratio of extreme singular values over the min(rows, cols) non-trivial ones.
inline double condition_number(const Matrix& a)
{
    const Matrix at = a.transposed();
    const Matrix gram = symmetrized(a.rows() >= a.cols() ? at * a : a * at);
    const auto ep = sym_eig(gram, 1e-12);
    const double lmax = ep.values.front();
    const double lmin = ep.values.back();
    if (!(lmin > 0.0) || !(lmax > 0.0))
        return std::numeric_limits<double>::infinity();
    return std::sqrt(lmax / lmin);
}

//
// data = a * sources. `a` must be well-conditioned on its min(n, m)
// dimensional range (condition number <= 1e6); for n >= m that is full column
// rank.
//
inline Recording mix_sources(const Matrix& sources, const Matrix& a, double fs,
                             std::vector<std::string> channel_names = {})
{
    if (a.cols() != sources.rows())
        throw Error(ErrorCode::DimensionMismatch, "mixing matrix columns != source count");
    const double cond = condition_number(a);
    if (!(cond <= 1e6))
        throw Error(ErrorCode::RankDeficientMixing,
                    "mixing matrix condition number " + std::to_string(cond) + " exceeds 1e6");
    return Recording(a * sources, fs, std::move(channel_names));
}

// Gaussian n x m matrix, redrawn until its condition number is <= max_condition.
inline Matrix random_mixing(std::size_t n, std::size_t m, std::uint64_t seed, double max_condition = 50.0)
{
    Rng rng(seed);
    for (int attempt = 0; attempt < 10000; ++attempt)
    {
        Matrix a(n, m);
        for (double& v : a.data())
            v = rng.normal();
        if (condition_number(a) <= max_condition)
            return a;
    }
    throw Error(ErrorCode::RankDeficientMixing, "could not draw a well-conditioned mixing matrix");
}

struct GroundTruth
{
    Matrix sources;
    Matrix mixing;
    std::vector<std::size_t> artifact_sources;
    Matrix artifact_free; // mixing * sources with artifact rows zeroed
};

struct TrialSet
{
    Recording recording;
    std::vector<Trial> trials;
    GroundTruth ground_truth;
};

struct DatasetOptions
{
    double erd_depth = 0.7;
    double baseline_s = 2.0;
    double imagery_s  = 2.0;
    // Left- and right-hemisphere rhythms sit at slightly different
    // frequencies so that their lagged-correlation profiles differ.
    double left_mu_hz    = 10.0;
    double left_beta_hz  = 20.0;
    double right_mu_hz   = 11.0;
    double right_beta_hz = 23.0;
    double line_hz    = 50.0;
    double blink_rate = 0.25;
    double mu_amplitude    = 10.0;
    double beta_amplitude  = 6.0;
    double noise_amplitude = 2.0;
    double blink_amplitude = 40.0;
    double line_amplitude  = 5.0;
};

//
// Standard motor-imagery dataset: 7 sources
//   0 mu (left hemisphere)   1 beta (left)      -- ERD on "right" trials
//   2 mu (right hemisphere)  3 beta (right)     -- ERD on "left" trials
//   4 broadband AR(2) noise  5 eye blinks       6 mains interference
// mixed into `channels` channels. Trials alternate left/right, each a
// baseline window followed immediately by an imagery window.
//
inline TrialSet make_dataset(std::size_t n_trials_per_class, std::size_t channels, double fs,
                             std::uint64_t seed, const DatasetOptions& opts = {})
{
    if (n_trials_per_class < 1)
        throw Error(ErrorCode::InvalidArgument, "need at least one trial per class");
    if (channels < 4)
        throw Error(ErrorCode::InvalidArgument, "need at least 4 channels");

    const auto baseline = static_cast<std::size_t>(std::round(opts.baseline_s * fs));
    const auto imagery  = static_cast<std::size_t>(std::round(opts.imagery_s * fs));
    std::vector<Trial> trials;
    for (std::size_t i = 0; i < 2 * n_trials_per_class; ++i)
    {
        Trial t;
        t.baseline_start = i * (baseline + imagery);
        t.baseline_end   = t.baseline_start + baseline;
        t.start = t.baseline_end;
        t.end   = t.start + imagery;
        t.label = i % 2 == 0 ? Label::Left : Label::Right;
        trials.push_back(t);
    }
    const double duration = static_cast<double>(trials.back().end) / fs;

    auto rhythm = [&](SourceKind kind, double hz, double amp, Label by) {
        SourceSpec s;
        s.kind = kind;
        s.frequency = hz;
        s.amplitude = amp;
        s.erd_depth = opts.erd_depth;
        s.modulated_by = by;
        return s;
    };
    std::vector<SourceSpec> specs{
        rhythm(SourceKind::MuRhythm, opts.left_mu_hz, opts.mu_amplitude, Label::Right),
        rhythm(SourceKind::BetaRhythm, opts.left_beta_hz, opts.beta_amplitude, Label::Right),
        rhythm(SourceKind::MuRhythm, opts.right_mu_hz, opts.mu_amplitude, Label::Left),
        rhythm(SourceKind::BetaRhythm, opts.right_beta_hz, opts.beta_amplitude, Label::Left),
    };
    SourceSpec noise;
    noise.kind = SourceKind::BroadbandNoise;
    noise.amplitude = opts.noise_amplitude;
    SourceSpec blink;
    blink.kind = SourceKind::EyeblinkArtifact;
    blink.frequency = opts.blink_rate;
    blink.amplitude = opts.blink_amplitude;
    SourceSpec line;
    line.kind = SourceKind::PowerlineArtifact;
    line.frequency = opts.line_hz;
    line.amplitude = opts.line_amplitude;
    specs.push_back(noise);
    specs.push_back(blink);
    specs.push_back(line);

    Matrix sources = generate_sources(specs, duration, fs, trials, Rng::derive(seed, 0));
    Matrix mixing  = random_mixing(channels, specs.size(), Rng::derive(seed, 1));

    std::vector<std::string> names;
    for (std::size_t c = 0; c < channels; ++c)
        names.push_back("ch" + std::to_string(c));
    Recording rec = mix_sources(sources, mixing, fs, names);

    const std::vector<std::size_t> artifacts{5, 6};
    Matrix clean_sources = sources;
    for (auto k : artifacts)
        std::fill(clean_sources.row(k).begin(), clean_sources.row(k).end(), 0.0);
    Matrix artifact_free = mixing * clean_sources;

    return TrialSet{std::move(rec), std::move(trials),
                    GroundTruth{std::move(sources), std::move(mixing), artifacts,
                                std::move(artifact_free)}};
}

} // namespace resobi

#endif
