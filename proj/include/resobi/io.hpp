#ifndef RESOBI_IO_HPP
#define RESOBI_IO_HPP

#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "resobi/bss.hpp"
#include "resobi/error.hpp"
#include "resobi/matrix.hpp"
#include "resobi/recording.hpp"
#include "resobi/svm.hpp"
#include "resobi/synthgen.hpp"

//
// File formats
//
// Recording / matrix CSV:
//     # channels=<n> samples=<T>
//     n lines of T comma-separated decimal floats (shortest round-trip form)
// A recording additionally has a JSON sidecar `<name>.meta.json` next to
// `<name>.csv`:
//     { "format_version": 1, "sample_rate": fs, "channel_names": [...],
//       "trials": [ {start, end, label, baseline_start, baseline_end} ],      (trial sets)
//       "ground_truth": { "sources": file, "mixing": file,
//                         "artifact_free": file, "artifact_sources": [...] } } (trial sets)
// File references in the sidecar are relative to the sidecar's directory.
//
namespace resobi::io
{

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr int format_version = 1;

inline std::string format_double(double v)
{
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline fs::path sidecar_path(const fs::path& csv)
{
    fs::path p = csv;
    if (p.extension() == ".csv")
        p.replace_extension();
    p += ".meta.json";
    return p;
}

namespace detail
{

inline std::ifstream open_in(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for reading");
    return in;
}

inline std::ofstream open_out(const fs::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
    return out;
}

inline double parse_double(std::string_view tok, std::size_t line, const fs::path& path)
{
    while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t'))
        tok.remove_prefix(1);
    while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t' || tok.back() == '\r'))
        tok.remove_suffix(1);
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || res.ec != std::errc() || res.ptr != tok.data() + tok.size() || !std::isfinite(v))
        throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line) +
                                               ": invalid number '" + std::string(tok) + "'");
    return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep)
{
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true)
    {
        const auto next = s.find(sep, pos);
        out.push_back(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
        if (next == std::string_view::npos)
            break;
        pos = next + 1;
    }
    return out;
}

inline json read_json(const fs::path& path)
{
    auto in = open_in(path);
    try
    {
        return json::parse(in);
    }
    catch (const json::exception& e)
    {
        throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
}

inline void write_json(const json& j, const fs::path& path)
{
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

} // namespace detail

//-----------------------------------------------------------------------------
// Matrix / recording CSV
//-----------------------------------------------------------------------------

inline void write_matrix_csv(const Matrix& m, const fs::path& path)
{
    auto out = detail::open_out(path);
    out << "# channels=" << m.rows() << " samples=" << m.cols() << '\n';
    std::string line;
    for (std::size_t i = 0; i < m.rows(); ++i)
    {
        line.clear();
        for (std::size_t j = 0; j < m.cols(); ++j)
        {
            if (j)
                line += ',';
            line += format_double(m(i, j));
        }
        out << line << '\n';
    }
    if (!out)
        throw Error(ErrorCode::Io, "write to '" + path.string() + "' failed");
}

inline Matrix read_matrix_csv(const fs::path& path)
{
    auto in = detail::open_in(path);
    std::string line;
    std::size_t lineno = 0;
    std::size_t rows = 0, cols = 0;
    bool have_header = false;
    while (std::getline(in, line))
    {
        ++lineno;
        if (line.empty() || line == "\r")
            continue;
        std::istringstream hs(line);
        std::string hash, ch, sm;
        hs >> hash >> ch >> sm;
        if (hash != "#" || ch.rfind("channels=", 0) != 0 || sm.rfind("samples=", 0) != 0)
            throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno) +
                                                   ": expected '# channels=<n> samples=<T>'");
        rows = static_cast<std::size_t>(detail::parse_double(ch.substr(9), lineno, path));
        cols = static_cast<std::size_t>(detail::parse_double(sm.substr(8), lineno, path));
        if (rows == 0 || cols == 0)
            throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno) +
                                                   ": dimensions must be positive");
        have_header = true;
        break;
    }
    if (!have_header)
        throw Error(ErrorCode::ParseError, path.string() + ": missing header");

    std::vector<double> data;
    data.reserve(rows * cols);
    std::size_t got = 0;
    while (std::getline(in, line))
    {
        ++lineno;
        if (line.empty() || line == "\r")
            continue;
        if (got == rows)
            throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno) +
                                                   ": more than " + std::to_string(rows) + " rows");
        const auto toks = detail::split(line, ',');
        if (toks.size() != cols)
            throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno) +
                                                   ": expected " + std::to_string(cols) +
                                                   " values, found " + std::to_string(toks.size()));
        for (auto t : toks)
            data.push_back(detail::parse_double(t, lineno, path));
        ++got;
    }
    if (got != rows)
        throw Error(ErrorCode::ParseError, path.string() + ": expected " + std::to_string(rows) +
                                               " rows, found " + std::to_string(got));
    return Matrix(rows, cols, std::move(data));
}

inline json recording_meta(const Recording& rec)
{
    return json{{"format_version", format_version},
                {"sample_rate", rec.sample_rate()},
                {"channel_names", rec.channel_names()}};
}

inline void write_recording(const Recording& rec, const fs::path& path)
{
    write_matrix_csv(rec.data(), path);
    detail::write_json(recording_meta(rec), sidecar_path(path));
}

inline json read_sidecar(const fs::path& csv)
{
    const auto meta = sidecar_path(csv);
    if (!fs::exists(meta))
        throw Error(ErrorCode::MissingSidecar, "no sidecar '" + meta.string() + "' for '" +
                                                   csv.string() + "'");
    return detail::read_json(meta);
}

inline Recording read_recording(const fs::path& path)
{
    if (!fs::exists(path))
        throw Error(ErrorCode::Io, "'" + path.string() + "' does not exist");
    Matrix data = read_matrix_csv(path);
    const json meta = read_sidecar(path);
    try
    {
        const double fs_hz = meta.at("sample_rate").get<double>();
        std::vector<std::string> names;
        if (meta.contains("channel_names"))
            names = meta.at("channel_names").get<std::vector<std::string>>();
        return Recording(std::move(data), fs_hz, std::move(names));
    }
    catch (const json::exception& e)
    {
        throw Error(ErrorCode::ParseError, sidecar_path(path).string() + ": " + e.what());
    }
}

//-----------------------------------------------------------------------------
// Trial sets
//-----------------------------------------------------------------------------

inline json trials_to_json(std::span<const Trial> trials)
{
    json arr = json::array();
    for (const auto& t : trials)
        arr.push_back({{"start", t.start},
                       {"end", t.end},
                       {"label", std::string(to_string(t.label))},
                       {"baseline_start", t.baseline_start},
                       {"baseline_end", t.baseline_end}});
    return arr;
}

inline std::vector<Trial> trials_from_json(const json& arr)
{
    std::vector<Trial> trials;
    for (const auto& j : arr)
    {
        Trial t;
        t.start = j.at("start").get<std::size_t>();
        t.end   = j.at("end").get<std::size_t>();
        t.label = parse_label(j.at("label").get<std::string>());
        t.baseline_start = j.at("baseline_start").get<std::size_t>();
        t.baseline_end   = j.at("baseline_end").get<std::size_t>();
        trials.push_back(t);
    }
    return trials;
}

inline void write_trialset(const TrialSet& ts, const fs::path& path)
{
    write_matrix_csv(ts.recording.data(), path);
    json meta = recording_meta(ts.recording);
    meta["trials"] = trials_to_json(ts.trials);

    const auto& gt = ts.ground_truth;
    if (!gt.sources.empty())
    {
        fs::path stem = path;
        stem.replace_extension();
        const auto name = stem.filename().string();
        const auto dir  = path.parent_path();
        write_matrix_csv(gt.sources, dir / (name + ".sources.csv"));
        write_matrix_csv(gt.mixing, dir / (name + ".mixing.csv"));
        write_matrix_csv(gt.artifact_free, dir / (name + ".artifact_free.csv"));
        meta["ground_truth"] = {{"sources", name + ".sources.csv"},
                                {"mixing", name + ".mixing.csv"},
                                {"artifact_free", name + ".artifact_free.csv"},
                                {"artifact_sources", gt.artifact_sources}};
    }
    detail::write_json(meta, sidecar_path(path));
}

// Trials and ground truth are optional; absent ones come back empty.
inline TrialSet read_trialset(const fs::path& path)
{
    Recording rec = read_recording(path);
    const json meta = read_sidecar(path);
    try
    {
        TrialSet ts{std::move(rec), {}, {}};
        if (meta.contains("trials"))
            ts.trials = trials_from_json(meta.at("trials"));
        validate_schedule(ts.trials, ts.recording.samples());
        if (meta.contains("ground_truth"))
        {
            const auto& g = meta.at("ground_truth");
            const auto dir = path.parent_path();
            ts.ground_truth.sources = read_matrix_csv(dir / g.at("sources").get<std::string>());
            ts.ground_truth.mixing  = read_matrix_csv(dir / g.at("mixing").get<std::string>());
            ts.ground_truth.artifact_free =
                read_matrix_csv(dir / g.at("artifact_free").get<std::string>());
            ts.ground_truth.artifact_sources = g.at("artifact_sources").get<std::vector<std::size_t>>();
        }
        return ts;
    }
    catch (const json::exception& e)
    {
        throw Error(ErrorCode::ParseError, sidecar_path(path).string() + ": " + e.what());
    }
    catch (const Error& e)
    {
        if (e.code() == ErrorCode::InvalidSpec)
            throw Error(ErrorCode::ParseError, sidecar_path(path).string() + ": " + e.detail());
        throw;
    }
}

//-----------------------------------------------------------------------------
// JSON encodings
//-----------------------------------------------------------------------------

inline json matrix_to_json(const Matrix& m)
{
    return json{{"rows", m.rows()},
                {"cols", m.cols()},
                {"data", std::vector<double>(m.data().begin(), m.data().end())}};
}

inline Matrix matrix_from_json(const json& j)
{
    return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                  j.at("data").get<std::vector<double>>());
}

// Everything except the source time series, which go to a CSV of their own.
inline json separation_to_json(const SeparationResult& res)
{
    json warnings = json::array();
    for (auto w : res.diagnostics.warnings)
        warnings.push_back(std::string(to_string(w)));
    return json{{"format_version", format_version},
                {"method", std::string(to_string(res.method))},
                {"elapsed_seconds", res.elapsed_seconds},
                {"components", res.components()},
                {"lags", res.lags},
                {"sample_rate", res.sample_rate},
                {"channel_names", res.channel_names},
                {"means", res.means},
                {"unmixing", matrix_to_json(res.unmixing)},
                {"mixing_estimate", matrix_to_json(res.mixing_estimate)},
                {"rotation", matrix_to_json(res.rotation)},
                {"diagnostics",
                 {{"score", res.diagnostics.score},
                  {"iterations", res.diagnostics.iterations},
                  {"score_history", res.diagnostics.score_history},
                  {"combination_weights", res.diagnostics.combination_weights},
                  {"warnings", warnings}}}};
}

inline json model_to_json(const SvmModel& m)
{
    json kernel = {{"type", std::string(to_string(m.kernel.type))}};
    if (m.kernel.type == KernelType::Rbf)
        kernel["gamma"] = m.kernel.gamma;
    return json{{"format_version", format_version},
                {"kernel", kernel},
                {"c", m.c},
                {"bias", m.bias},
                {"alphas", m.alphas},
                {"support_vectors", m.support_vectors},
                {"support_labels", m.support_labels},
                {"support_indices", m.support_indices},
                {"converged", m.converged},
                {"standardizer",
                 {{"mean", m.standardizer.mean},
                  {"stddev", m.standardizer.stddev},
                  {"constant", m.standardizer.constant}}}};
}

inline SvmModel model_from_json(const json& j)
{
    try
    {
        if (j.at("format_version").get<int>() != format_version)
            throw Error(ErrorCode::ParseError, "unsupported model format_version");
        SvmModel m;
        const auto& k = j.at("kernel");
        const auto type = k.at("type").get<std::string>();
        if (type == "linear")
            m.kernel = Kernel::linear();
        else if (type == "rbf")
            m.kernel = Kernel::rbf(k.at("gamma").get<double>());
        else
            throw Error(ErrorCode::ParseError, "unknown kernel type '" + type + "'");
        m.c    = j.at("c").get<double>();
        m.bias = j.at("bias").get<double>();
        m.alphas          = j.at("alphas").get<std::vector<double>>();
        m.support_vectors = j.at("support_vectors").get<std::vector<std::vector<double>>>();
        m.support_labels  = j.at("support_labels").get<std::vector<int>>();
        if (j.contains("support_indices"))
            m.support_indices = j.at("support_indices").get<std::vector<std::size_t>>();
        m.converged = j.value("converged", true);
        const auto& s = j.at("standardizer");
        m.standardizer.mean     = s.at("mean").get<std::vector<double>>();
        m.standardizer.stddev   = s.at("stddev").get<std::vector<double>>();
        m.standardizer.constant = s.at("constant").get<std::vector<bool>>();
        if (m.alphas.size() != m.support_vectors.size() || m.alphas.size() != m.support_labels.size() ||
            m.standardizer.stddev.size() != m.standardizer.mean.size())
            throw Error(ErrorCode::ParseError, "inconsistent model array lengths");
        return m;
    }
    catch (const json::exception& e)
    {
        throw Error(ErrorCode::ParseError, std::string("model: ") + e.what());
    }
}

inline void save_model(const SvmModel& m, const fs::path& path)
{
    detail::write_json(model_to_json(m), path);
}

inline SvmModel load_model(const fs::path& path) { return model_from_json(detail::read_json(path)); }

//-----------------------------------------------------------------------------
// Feature tables: header "trial,label,<names...>", one row per trial,
// label "left" (-1) or "right" (+1).
//-----------------------------------------------------------------------------

inline void write_features(const LabeledDataset& data, std::span<const std::string> names,
                           const fs::path& path)
{
    auto out = detail::open_out(path);
    out << "trial,label";
    for (const auto& n : names)
        out << ',' << n;
    out << '\n';
    for (std::size_t i = 0; i < data.size(); ++i)
    {
        out << (i < data.provenance.size() ? data.provenance[i] : std::to_string(i)) << ','
            << (data.labels[i] < 0 ? "left" : "right");
        for (double v : data.vectors[i])
            out << ',' << format_double(v);
        out << '\n';
    }
}

inline LabeledDataset read_features(const fs::path& path)
{
    auto in = detail::open_in(path);
    std::string line;
    std::size_t lineno = 0;
    LabeledDataset data;
    std::size_t width = 0;
    while (std::getline(in, line))
    {
        ++lineno;
        if (line.empty() || line == "\r")
            continue;
        const auto toks = detail::split(line, ',');
        if (width == 0)
        {
            if (toks.size() < 3 || toks[0] != "trial" || toks[1] != "label")
                throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno) +
                                                       ": expected header 'trial,label,...'");
            width = toks.size();
            continue;
        }
        if (toks.size() != width)
            throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno) +
                                                   ": expected " + std::to_string(width) + " fields");
        data.provenance.emplace_back(toks[0]);
        if (toks[1] == "left")
            data.labels.push_back(-1);
        else if (toks[1] == "right")
            data.labels.push_back(1);
        else
            throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno) +
                                                   ": label must be 'left' or 'right'");
        std::vector<double> v;
        for (std::size_t k = 2; k < toks.size(); ++k)
            v.push_back(detail::parse_double(toks[k], lineno, path));
        data.vectors.push_back(std::move(v));
    }
    if (width == 0)
        throw Error(ErrorCode::ParseError, path.string() + ": empty feature table");
    return data;
}

} // namespace resobi::io

#endif
