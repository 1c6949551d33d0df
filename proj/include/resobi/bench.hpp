#ifndef RESOBI_BENCH_HPP
#define RESOBI_BENCH_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "resobi/bss.hpp"
#include "resobi/error.hpp"
#include "resobi/io.hpp"
#include "resobi/synthgen.hpp"

namespace resobi
{

struct BenchmarkOptions
{
    std::size_t n_datasets  = 5;
    std::size_t channels    = 16;
    std::size_t samples     = 30000;
    std::vector<std::size_t> lags = default_lags();
    std::size_t repetitions = 5;
    std::uint64_t seed      = 0;
    double sample_rate      = 250.0;
};

struct BenchmarkRow
{
    std::size_t dataset = 0;
    std::size_t channels = 0;
    std::size_t samples = 0;
    double time_schur_s = 0.0;
    double time_jacobi_s = 0.0;
    double ratio = 0.0; // time_jacobi / time_schur
    double score_schur = 0.0;
    double score_jacobi = 0.0;
};

struct BenchmarkReport
{
    std::vector<BenchmarkRow> rows;
    std::string environment;
    std::size_t repetitions = 0;
    std::size_t warmup_runs = 1;
    std::string aggregation = "median";
    std::vector<std::size_t> lags;
    std::uint64_t seed = 0;
};

// Published reference timings (seconds) for five EEG datasets on unknown
// hardware; only their ratios are meaningful here.
struct ReferenceTiming
{
    int dataset;
    double schur_s;
    double jacobi_s;
};

inline constexpr std::array<ReferenceTiming, 5> reference_timings{{
    {1, 1.567458, 9.845235},
    {2, 1.845277, 10.379097},
    {3, 1.814460, 11.514513},
    {4, 1.739605, 9.800095},
    {5, 1.600469, 9.799495},
}};

inline double median(std::vector<double> v)
{
    if (v.empty())
        throw Error(ErrorCode::Empty, "median of nothing");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

//
// Synthetic recording with one latent source per channel. Even sources are
// sinusoids, odd ones narrow-band AR(2) resonators (pole radius 0.95), with
// centre frequencies spread over (1.5 Hz, fs/2 - 3.5 Hz) so every source has
// its own lag profile.
//
inline Recording benchmark_recording(std::size_t channels, std::size_t samples, double fs,
                                     std::uint64_t seed)
{
    Rng rng(Rng::derive(seed, 0));
    std::vector<SourceSpec> specs;
    const double span = fs / 2.0 - 5.0;
    for (std::size_t k = 0; k < channels; ++k)
    {
        const double f = 1.5 + span * (static_cast<double>(k) + rng.uniform(0.2, 0.8)) /
                                   static_cast<double>(channels);
        SourceSpec s;
        s.amplitude = rng.uniform(0.5, 2.0);
        if (k % 2 == 0)
        {
            s.kind = SourceKind::MuRhythm;
            s.frequency = f;
        }
        else
        {
            constexpr double r = 0.95;
            s.kind = SourceKind::BroadbandNoise;
            s.ar1 = 2.0 * r * std::cos(2.0 * std::numbers::pi * f / fs);
            s.ar2 = -r * r;
        }
        specs.push_back(s);
    }
    const Matrix sources = generate_sources(specs, static_cast<double>(samples) / fs, fs, {},
                                            Rng::derive(seed, 1));
    const Matrix mixing = random_mixing(channels, channels, Rng::derive(seed, 2), 100.0);
    return mix_sources(sources, mixing, fs);
}

inline std::string environment_note()
{
    std::string cpu = "unknown CPU";
    std::ifstream info("/proc/cpuinfo");
    for (std::string line; std::getline(info, line);)
    {
        if (line.rfind("model name", 0) == 0)
        {
            const auto colon = line.find(':');
            if (colon != std::string::npos)
                cpu = line.substr(colon + 2);
            break;
        }
    }
    std::ostringstream os;
    os << cpu << ", " << std::thread::hardware_concurrency() << " hardware threads";
#if defined(__VERSION__)
    os << ", compiler " << __VERSION__;
#endif
    return os.str();
}

//
// Times sobi() with both methods on n_datasets seeded recordings. Each
// method gets one discarded warm-up run followed by `repetitions` timed runs,
// strictly sequential; the reported time is the median of the timed runs.
//
inline BenchmarkReport run_benchmark(const BenchmarkOptions& opts)
{
    if (opts.repetitions < 3)
        throw Error(ErrorCode::InvalidArgument, "benchmark needs at least 3 repetitions");
    if (opts.n_datasets == 0)
        throw Error(ErrorCode::InvalidArgument, "benchmark needs at least one dataset");

    BenchmarkReport report;
    report.environment = environment_note();
    report.repetitions = opts.repetitions;
    report.lags = opts.lags;
    report.seed = opts.seed;

    for (std::size_t d = 0; d < opts.n_datasets; ++d)
    {
        const Recording rec = benchmark_recording(opts.channels, opts.samples, opts.sample_rate,
                                                  Rng::derive(opts.seed, 100 + d));
        BenchmarkRow row;
        row.dataset  = d + 1;
        row.channels = opts.channels;
        row.samples  = opts.samples;
        for (Method m : {Method::Schur, Method::Jacobi})
        {
            SobiOptions so;
            so.lags   = opts.lags;
            so.method = m;
            so.seed   = opts.seed;
            const SeparationResult warm = sobi(rec, so);
            std::vector<double> times;
            for (std::size_t r = 0; r < opts.repetitions; ++r)
                times.push_back(sobi(rec, so).elapsed_seconds);
            const double t = median(std::move(times));
            if (m == Method::Schur)
            {
                row.time_schur_s = t;
                row.score_schur  = warm.diagnostics.score;
            }
            else
            {
                row.time_jacobi_s = t;
                row.score_jacobi  = warm.diagnostics.score;
            }
        }
        row.ratio = row.time_jacobi_s / row.time_schur_s;
        report.rows.push_back(row);
    }
    return report;
}

inline nlohmann::json report_to_json(const BenchmarkReport& r)
{
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"dataset", row.dataset},
                        {"channels", row.channels},
                        {"samples", row.samples},
                        {"time_schur_s", row.time_schur_s},
                        {"time_jacobi_s", row.time_jacobi_s},
                        {"ratio", row.ratio},
                        {"score_schur", row.score_schur},
                        {"score_jacobi", row.score_jacobi}});
    nlohmann::json reference = nlohmann::json::array();
    for (const auto& ref : reference_timings)
        reference.push_back({{"dataset", ref.dataset},
                             {"time_schur_s", ref.schur_s},
                             {"time_jacobi_s", ref.jacobi_s},
                             {"ratio", ref.jacobi_s / ref.schur_s}});
    return {{"format_version", io::format_version},
            {"environment", r.environment},
            {"repetitions", r.repetitions},
            {"warmup_runs", r.warmup_runs},
            {"aggregation", r.aggregation},
            {"lags", r.lags},
            {"seed", r.seed},
            {"rows", rows},
            {"reference", reference}};
}

inline std::string format_report_table(const BenchmarkReport& r)
{
    std::ostringstream os;
    char buf[256];
    os << "SOBI execution time in seconds (" << r.aggregation << " of " << r.repetitions
       << " runs after " << r.warmup_runs << " warm-up)\n";
    std::snprintf(buf, sizeof buf, "%-8s %8s %8s %14s %14s %8s %12s %12s\n", "Dataset", "Channels",
                  "Samples", "Schur (s)", "Jacobi (s)", "Ratio", "Score Schur", "Score Jacobi");
    os << buf;
    for (const auto& row : r.rows)
    {
        std::snprintf(buf, sizeof buf, "%-8zu %8zu %8zu %14.6f %14.6f %8.3f %12.3e %12.3e\n",
                      row.dataset, row.channels, row.samples, row.time_schur_s, row.time_jacobi_s,
                      row.ratio, row.score_schur, row.score_jacobi);
        os << buf;
    }
    os << "\nReference timings (published, different hardware and data; compare ratios only)\n";
    std::snprintf(buf, sizeof buf, "%-8s %14s %14s %8s\n", "Dataset", "Schur (s)", "Jacobi (s)", "Ratio");
    os << buf;
    double lo = 1e300, hi = 0.0;
    for (const auto& ref : reference_timings)
    {
        const double ratio = ref.jacobi_s / ref.schur_s;
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
        std::snprintf(buf, sizeof buf, "%-8d %14.6f %14.6f %8.3f\n", ref.dataset, ref.schur_s,
                      ref.jacobi_s, ratio);
        os << buf;
    }
    double mlo = 1e300, mhi = 0.0;
    for (const auto& row : r.rows)
    {
        mlo = std::min(mlo, row.ratio);
        mhi = std::max(mhi, row.ratio);
    }
    std::snprintf(buf, sizeof buf,
                  "\nMeasured speed-up %.2fx-%.2fx vs. reference %.2fx-%.2fx. "
                  "Absolute seconds depend on hardware and are not comparable.\n",
                  mlo, mhi, lo, hi);
    os << buf << "Environment: " << r.environment << '\n';
    return os.str();
}

} // namespace resobi

#endif
