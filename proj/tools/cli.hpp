#ifndef RESOBI_TOOLS_CLI_HPP
#define RESOBI_TOOLS_CLI_HPP

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>

#include "resobi/resobi.hpp"

//
// Command-line front end. Exit codes:
//   0  success
//   1  usage error (unknown flag, bad value, missing argument)
//   2  data or convergence error
//
namespace resobi::cli
{

namespace fs = std::filesystem;

inline constexpr int exit_ok    = 0;
inline constexpr int exit_usage = 1;
inline constexpr int exit_data  = 2;

struct UsageError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

// Thrown after outputs were written when an iterative solver hit its limit.
struct ConvergenceFailure : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

// "1..10" (inclusive range) or "1,2,5".
inline std::vector<std::size_t> parse_lags(std::string_view s)
{
    auto number = [&](std::string_view tok) {
        std::size_t v = 0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (tok.empty() || res.ec != std::errc() || res.ptr != tok.data() + tok.size())
            throw UsageError("--lags: '" + std::string(tok) + "' is not a non-negative integer");
        return v;
    };
    std::vector<std::size_t> lags;
    if (const auto dots = s.find(".."); dots != std::string_view::npos)
    {
        const auto lo = number(s.substr(0, dots));
        const auto hi = number(s.substr(dots + 2));
        if (lo > hi)
            throw UsageError("--lags: empty range '" + std::string(s) + "'");
        for (auto l = lo; l <= hi; ++l)
            lags.push_back(l);
        return lags;
    }
    std::size_t pos = 0;
    while (true)
    {
        const auto comma = s.find(',', pos);
        lags.push_back(number(s.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
        if (comma == std::string_view::npos)
            break;
        pos = comma + 1;
    }
    return lags;
}

inline std::vector<Band> parse_bands(const std::vector<std::string>& names)
{
    std::vector<Band> bands;
    for (const auto& n : names)
    {
        if (n == "mu")
            bands.push_back(mu_band());
        else if (n == "beta")
            bands.push_back(beta_band());
        else
        {
            // name:low:high
            const auto a = n.find(':'), b = n.rfind(':');
            if (a == std::string::npos || a == b)
                throw UsageError("--bands: expected 'mu', 'beta' or name:low:high, got '" + n + "'");
            try
            {
                bands.push_back({std::stod(n.substr(a + 1, b - a - 1)), std::stod(n.substr(b + 1)), n.substr(0, a)});
            }
            catch (const std::logic_error&)
            {
                throw UsageError("--bands: bad edges in '" + n + "'");
            }
        }
    }
    return bands;
}

inline void write_json_file(const nlohmann::json& j, const std::string& path)
{
    if (path.empty() || path == "-")
    {
        std::cout << j.dump(2) << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
    out << j.dump(2) << '\n';
}

inline void report_warnings(std::span<const Warning> warnings)
{
    for (auto w : warnings)
        std::cerr << "warning: " << to_string(w) << '\n';
}

inline SeparationResult separate(const Recording& rec, Method method, const std::vector<std::size_t>& lags,
                                 std::optional<std::uint64_t> seed)
{
    SobiOptions so;
    so.method = method;
    so.lags   = lags;
    so.seed   = seed.value_or(0);
    auto res  = sobi(rec, so);
    // the reweighted retry is the only random step of a separation
    if (res.has_warning(Warning::DegenerateCombination) && !seed)
        throw Error(ErrorCode::DegenerateData,
                    "Schur combination has a repeated eigenvalue; rerun with --seed to allow reweighting");
    return res;
}

inline int run(int argc, const char* const* argv)
{
    CLI::App app{"Second-order blind source separation (Jacobi and Schur SOBI), ERD features and SVM"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Expand all help");

    // gen
    auto* gen = app.add_subcommand("gen", "Write a synthetic motor-imagery trial set");
    std::string gen_out;
    std::size_t gen_trials = 20, gen_channels = 8;
    double gen_fs = 250.0, gen_depth = 0.7;
    std::uint64_t gen_seed = 0;
    gen->add_option("--out,-o", gen_out, "Output CSV (sidecar and ground truth written next to it)")->required();
    gen->add_option("--trials", gen_trials, "Trials per class")->capture_default_str();
    gen->add_option("--channels", gen_channels, "Channel count (>= 4)")->capture_default_str();
    gen->add_option("--fs", gen_fs, "Sample rate in Hz")->capture_default_str();
    gen->add_option("--erd-depth", gen_depth, "Fractional ERD depth in [0, 1]")->capture_default_str();
    gen->add_option("--seed", gen_seed, "Random seed")->required();

    // sobi
    auto* sobi_cmd = app.add_subcommand("sobi", "Separate a recording");
    std::string sobi_in, sobi_out, sobi_sources, sobi_method = "schur", sobi_lags = "1..10";
    std::optional<std::uint64_t> sobi_seed;
    sobi_cmd->add_option("input", sobi_in, "Recording CSV")->required();
    sobi_cmd->add_option("--method", sobi_method, "jacobi or schur")->capture_default_str()
        ->check(CLI::IsMember({"jacobi", "schur"}));
    sobi_cmd->add_option("--lags", sobi_lags, "Lags as 1..10 or 1,2,5")->capture_default_str();
    sobi_cmd->add_option("--out,-o", sobi_out, "Result JSON (default: standard output)");
    sobi_cmd->add_option("--sources", sobi_sources, "Write recovered sources to this CSV");
    sobi_cmd->add_option("--seed", sobi_seed, "Seed for the reweighted retry on a degenerate combination");

    // clean
    auto* clean = app.add_subcommand("clean", "Remove eye-blink and mains components");
    std::string clean_in, clean_out, clean_report, clean_method = "schur", clean_lags = "1..10";
    std::optional<std::uint64_t> clean_seed;
    clean->add_option("input", clean_in, "Recording CSV")->required();
    clean->add_option("--out,-o", clean_out, "Cleaned recording CSV")->required();
    clean->add_option("--method", clean_method, "jacobi or schur")->capture_default_str()
        ->check(CLI::IsMember({"jacobi", "schur"}));
    clean->add_option("--lags", clean_lags, "Lags as 1..10 or 1,2,5")->capture_default_str();
    clean->add_option("--report", clean_report, "Write removed components and separation JSON here");
    clean->add_option("--seed", clean_seed, "Seed for the reweighted retry on a degenerate combination");

    // features
    auto* feats = app.add_subcommand("features", "Per-trial band-power and energy features");
    std::string feats_in, feats_out;
    std::vector<std::string> feats_bands{"mu", "beta"};
    feats->add_option("input", feats_in, "Trial set CSV (sidecar must list trials)")->required();
    feats->add_option("--out,-o", feats_out, "Feature CSV")->required();
    feats->add_option("--bands", feats_bands, "Bands: mu, beta or name:low:high")->delimiter(',')
        ->capture_default_str();

    // train
    auto* train = app.add_subcommand("train", "Train an SVM on a feature CSV");
    std::string train_in, train_out, train_kernel = "linear";
    double train_c = 1.0, train_gamma = 1.0, train_tol = 1e-3;
    std::size_t train_passes = 50;
    std::uint64_t train_seed = 0;
    train->add_option("input", train_in, "Feature CSV")->required();
    train->add_option("--out,-o", train_out, "Model JSON")->required();
    train->add_option("--kernel", train_kernel, "linear or rbf")->capture_default_str()
        ->check(CLI::IsMember({"linear", "rbf"}));
    train->add_option("--c", train_c, "Box constraint C")->capture_default_str();
    train->add_option("--gamma", train_gamma, "RBF gamma")->capture_default_str();
    train->add_option("--tol", train_tol, "KKT tolerance")->capture_default_str();
    train->add_option("--max-passes", train_passes, "Quiet passes before stopping")->capture_default_str();
    train->add_option("--seed", train_seed, "Random seed")->required();

    // predict
    auto* predict = app.add_subcommand("predict", "Apply a trained SVM to a feature CSV");
    std::string pred_in, pred_model, pred_out;
    predict->add_option("input", pred_in, "Feature CSV")->required();
    predict->add_option("--model,-m", pred_model, "Model JSON")->required();
    predict->add_option("--out,-o", pred_out, "Predictions CSV (default: standard output)");

    // pipeline
    auto* pipe = app.add_subcommand("pipeline", "Separation, artifact removal, features and cross-validated SVM");
    std::string pipe_in, pipe_out, pipe_config, pipe_method, pipe_lags;
    std::size_t pipe_folds = 0;
    std::uint64_t pipe_seed = 0;
    pipe->add_option("input", pipe_in, "Trial set CSV")->required();
    pipe->add_option("--config", pipe_config, "Pipeline config JSON");
    pipe->add_option("--method", pipe_method, "jacobi, schur or both (default schur)")
        ->check(CLI::IsMember({"jacobi", "schur", "both"}));
    pipe->add_option("--lags", pipe_lags, "Lags as 1..10 or 1,2,5 (default 1..10)");
    pipe->add_option("--folds", pipe_folds, "Cross-validation folds (default 5)");
    pipe->add_option("--out,-o", pipe_out, "Result JSON (default: standard output)");
    pipe->add_option("--seed", pipe_seed, "Random seed")->required();

    // bench
    auto* bench = app.add_subcommand("bench", "Time Schur vs. Jacobi SOBI on synthetic recordings");
    BenchmarkOptions bopts;
    std::string bench_out = "bench_report.json", bench_lags = "1..10";
    bench->add_option("--datasets", bopts.n_datasets, "Number of datasets")->capture_default_str();
    bench->add_option("--channels", bopts.channels, "Channels per dataset")->capture_default_str();
    bench->add_option("--samples", bopts.samples, "Samples per channel")->capture_default_str();
    bench->add_option("--lags", bench_lags, "Lags as 1..10 or 1,2,5")->capture_default_str();
    bench->add_option("--repetitions", bopts.repetitions, "Timed runs per method (>= 3)")->capture_default_str();
    bench->add_option("--fs", bopts.sample_rate, "Sample rate in Hz")->capture_default_str();
    bench->add_option("--out,-o", bench_out, "Report JSON")->capture_default_str();
    bench->add_option("--seed", bopts.seed, "Random seed")->required();

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp& e)
    {
        std::cout << app.help();
        return exit_ok;
    }
    catch (const CLI::CallForAllHelp& e)
    {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    }
    catch (const CLI::ParseError& e)
    {
        std::cerr << "error: " << e.what() << "\n\n";
        const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        std::cerr << sub->help();
        return exit_usage;
    }

    try
    {
        if (gen->parsed())
        {
            const auto ts = make_dataset(gen_trials, gen_channels, gen_fs, gen_seed,
                                         DatasetOptions{.erd_depth = gen_depth});
            io::write_trialset(ts, gen_out);
            std::cout << "wrote " << gen_out << " (" << ts.recording.channels() << " channels, "
                      << ts.recording.samples() << " samples, " << ts.trials.size() << " trials)\n";
        }
        else if (sobi_cmd->parsed())
        {
            const auto lags = parse_lags(sobi_lags);
            const Recording rec = io::read_recording(sobi_in);
            const auto res = separate(rec, parse_method(sobi_method), lags, sobi_seed);
            report_warnings(res.diagnostics.warnings);
            if (!sobi_sources.empty())
                io::write_recording(Recording(res.sources, rec.sample_rate()), sobi_sources);
            write_json_file(io::separation_to_json(res), sobi_out);
            if (res.has_warning(Warning::NoConvergence))
                throw ConvergenceFailure("joint diagonalization hit its sweep limit");
        }
        else if (clean->parsed())
        {
            const auto lags = parse_lags(clean_lags);
            const Recording rec = io::read_recording(clean_in);
            const auto res = separate(rec, parse_method(clean_method), lags, clean_seed);
            report_warnings(res.diagnostics.warnings);
            const auto flagged = flag_artifact_components(res, rec.sample_rate());
            io::write_recording(remove_components(res, flagged), clean_out);
            std::cout << "removed " << flagged.size() << " of " << res.components() << " components\n";
            if (!clean_report.empty())
            {
                auto j = io::separation_to_json(res);
                j["removed_components"] = flagged;
                write_json_file(j, clean_report);
            }
            if (res.has_warning(Warning::NoConvergence))
                throw ConvergenceFailure("joint diagonalization hit its sweep limit");
        }
        else if (feats->parsed())
        {
            const auto bands = parse_bands(feats_bands);
            const TrialSet ts = io::read_trialset(feats_in);
            if (ts.trials.empty())
                throw Error(ErrorCode::Empty, "'" + feats_in + "' lists no trials");
            const auto data = trial_features(ts.recording, ts.trials, bands);
            io::write_features(data, feature_names(bands, ts.recording.channels()), feats_out);
            std::cout << "wrote " << data.size() << " feature vectors of length " << data.dimension() << '\n';
        }
        else if (train->parsed())
        {
            SvmOptions o;
            o.c = train_c;
            o.kernel = train_kernel == "rbf" ? Kernel::rbf(train_gamma) : Kernel::linear();
            o.tol = train_tol;
            o.max_passes = train_passes;
            o.seed = train_seed;
            if (!(o.c > 0.0) || !(o.tol > 0.0) || (o.kernel.type == KernelType::Rbf && !(o.kernel.gamma > 0.0)))
                throw UsageError("--c, --tol and --gamma must be positive");
            const auto data = io::read_features(train_in);
            const auto model = svm_train(data, o);
            io::save_model(model, train_out);
            std::cout << "trained on " << data.size() << " samples, " << model.alphas.size()
                      << " support vectors\n";
            if (!model.converged)
                throw ConvergenceFailure("SMO hit its pass limit");
        }
        else if (predict->parsed())
        {
            const auto model = io::load_model(pred_model);
            const auto data = io::read_features(pred_in);
            std::ofstream file;
            if (!pred_out.empty())
            {
                file.open(pred_out);
                if (!file)
                    throw Error(ErrorCode::Io, "cannot open '" + pred_out + "' for writing");
            }
            std::ostream& out = pred_out.empty() ? std::cout : file;
            out << "trial,predicted,decision\n";
            for (std::size_t i = 0; i < data.size(); ++i)
            {
                const auto p = svm_predict(model, data.vectors[i]);
                out << data.provenance[i] << ',' << (p.label < 0 ? "left" : "right") << ','
                    << io::format_double(p.decision) << '\n';
            }
        }
        else if (pipe->parsed())
        {
            PipelineConfig cfg;
            if (!pipe_config.empty())
                cfg = config_from_json(io::detail::read_json(pipe_config));
            if (!pipe_method.empty())
                cfg.method = parse_method_choice(pipe_method);
            if (!pipe_lags.empty())
                cfg.lags = parse_lags(pipe_lags);
            if (pipe_folds)
                cfg.folds = pipe_folds;
            cfg.seed = pipe_seed;
            const auto results = run_pipeline(cfg, fs::path(pipe_in));
            nlohmann::json j = {{"config", config_to_json(cfg)}, {"results", nlohmann::json::array()}};
            for (const auto& r : results)
            {
                report_warnings(r.warnings);
                j["results"].push_back(pipeline_result_to_json(r));
                std::cerr << to_string(r.method) << ": accuracy " << r.accuracy << ", removed "
                          << r.removed_components.size() << " components\n";
            }
            write_json_file(j, pipe_out);
        }
        else if (bench->parsed())
        {
            bopts.lags = parse_lags(bench_lags);
            const auto report = run_benchmark(bopts);
            write_json_file(report_to_json(report), bench_out);
            std::cout << format_report_table(report) << "Report written to " << bench_out << '\n';
        }
    }
    catch (const UsageError& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    }
    catch (const ConvergenceFailure& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return exit_data;
    }
    catch (const Error& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return exit_data;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return exit_data;
    }
    return exit_ok;
}

} // namespace resobi::cli

#endif
