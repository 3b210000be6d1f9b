#pragma once
/**
 * @file commands.hpp
 * @brief The simulate / restore / evaluate / oracle pipelines behind the CLI.
 *
 * Commands throw turbrest::Error on bad input or I/O failure. Artifacts carry
 * no timestamps, so a rerun with the manifest's parameters reproduces them
 * byte for byte.
 */

#include "turbrest/core.hpp"
#include "turbrest/drivers.hpp"
#include "turbrest/image_io.hpp"
#include "turbrest/metrics.hpp"
#include "turbrest/selector.hpp"
#include "turbrest/simulator.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace turbrest {

inline constexpr const char* kToolVersion = "1.0.0";

using Json = nlohmann::json;

namespace detail {

/// Finite doubles stay numbers; infinities become "inf" / "-inf", NaN becomes "nan".
inline Json number(double v)
{
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

template <typename T>
Json optional_number(const std::optional<T>& v)
{
    return v ? Json(*v) : Json(nullptr);
}

inline void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw Error("cannot write " + path.string());
    }
}

inline void ensure_directory(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw Error("cannot create output directory " + dir.string());
    }
}

inline std::string frame_name(std::size_t k, const char* prefix, const char* ext)
{
    std::ostringstream os;
    os << prefix << std::setw(4) << std::setfill('0') << (k + 1) << ext;
    return os.str();
}

/// Shortest round-trip decimal with '.' separator, independent of the global locale.
inline std::string csv_number(double v)
{
    if (!std::isfinite(v)) {
        return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    }
    return format_double(v);
}

}  // namespace detail

inline Json to_json(const ModelParams& p)
{
    return Json{{"model", std::string(to_string(p.model))},
                {"lambda", p.lambda},
                {"tau", detail::optional_number(p.tau)},
                {"rho", p.rho},
                {"mu", p.mu},
                {"gamma", p.gamma},
                {"beta", detail::optional_number(p.rpca.beta)},
                {"alpha0", detail::optional_number(p.rpca.alpha0)},
                {"epsilon", p.epsilon},
                {"max_outer", p.max_outer},
                {"rpca_tol", p.rpca.tol},
                {"rpca_max_iter", p.rpca.max_iter},
                {"tv_inner_tol", p.tv.inner_tol},
                {"tv_max_inner", p.tv.max_inner},
                {"dual_step", detail::optional_number(p.tv.dual_step)}};
}

inline Json to_json(const TurbulenceConfig& c)
{
    return Json{{"n_frames", c.n_frames},
                {"severe_fraction", c.severe_fraction},
                {"severe_strength", {c.severe_strength[0], c.severe_strength[1]}},
                {"mild_strength", {c.mild_strength[0], c.mild_strength[1]}},
                {"patch_size", c.patch_size},
                {"patch_density_divisor", c.patch_density_divisor},
                {"patch_sigma", c.effective_patch_sigma()},
                {"center_jitter", c.center_jitter},
                {"blur_sigma", c.blur_sigma},
                {"noise_sigma", c.noise_sigma},
                {"mild_noise_sigma", c.effective_mild_noise()},
                {"seed", c.seed}};
}

/// Binary sidecar: "TRMF", uint32 rows, uint32 cols (little-endian), then u and v as column-major float64.
inline void write_motion_field(const fs::path& path, const MotionField& field)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    auto put_u32 = [&](std::uint32_t v) {
        for (int b = 0; b < 4; ++b) out.put(static_cast<char>((v >> (8 * b)) & 0xFFU));
    };
    out.write("TRMF", 4);
    put_u32(static_cast<std::uint32_t>(field.u.rows()));
    put_u32(static_cast<std::uint32_t>(field.u.cols()));
    out.write(reinterpret_cast<const char*>(field.u.data()), static_cast<std::streamsize>(field.u.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(field.v.data()), static_cast<std::streamsize>(field.v.size() * sizeof(double)));
    if (!out) {
        throw Error("cannot write " + path.string());
    }
}

inline MotionField read_motion_field(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != "TRMF") {
        throw Error(path.string() + " is not a motion field file");
    }
    auto get_u32 = [&]() {
        unsigned char b[4] = {};
        in.read(reinterpret_cast<char*>(b), 4);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    };
    const auto rows = static_cast<Eigen::Index>(get_u32());
    const auto cols = static_cast<Eigen::Index>(get_u32());
    MotionField f = MotionField::zero(rows, cols);
    in.read(reinterpret_cast<char*>(f.u.data()), static_cast<std::streamsize>(f.u.size() * sizeof(double)));
    in.read(reinterpret_cast<char*>(f.v.data()), static_cast<std::streamsize>(f.v.size() * sizeof(double)));
    if (!in) {
        throw Error("truncated motion field " + path.string());
    }
    return f;
}

// --- simulate ---------------------------------------------------------------

struct SimulateRequest {
    fs::path truth;
    TurbulenceConfig config;
    fs::path out_dir;
    bool write_fields = false;
};

inline Json cmd_simulate(const SimulateRequest& req)
{
    req.config.validate();
    const Frame truth = read_image(req.truth);
    const SimulatedSequence sim = simulate_sequence(truth, req.config);
    detail::ensure_directory(req.out_dir);

    Json artifacts = Json::array();
    for (std::size_t k = 0; k < sim.frames.size(); ++k) {
        const std::string name = detail::frame_name(k, "frame_", ".png");
        write_png(req.out_dir / name, sim.frames[k]);
        artifacts.push_back(name);
        if (req.write_fields) {
            const std::string fname = detail::frame_name(k, "field_", ".bin");
            write_motion_field(req.out_dir / fname, sim.fields[k]);
            artifacts.push_back(fname);
        }
    }
    detail::write_text(req.out_dir / "config.txt", to_key_value(req.config));
    artifacts.push_back("config.txt");

    Json severe = Json::array();
    for (auto k : sim.severe_indices()) {
        severe.push_back(k + 1);
    }
    Json manifest{{"subcommand", "simulate"},
                  {"tool_version", kToolVersion},
                  {"input", req.truth.string()},
                  {"output_dir", req.out_dir.string()},
                  {"seed", req.config.seed},
                  {"turbulence_config", to_json(req.config)},
                  {"severe_indices", severe},
                  {"strengths", sim.strengths},
                  {"artifacts", artifacts}};
    detail::write_text(req.out_dir / "manifest.json", manifest.dump(2) + "\n");
    return manifest;
}

// --- restore ----------------------------------------------------------------

struct RestoreRequest {
    fs::path frames_dir;
    ModelParams params;
    fs::path out_dir;
    std::uint64_t seed = 0;  ///< recorded only; the drivers are deterministic
};

struct RestoreOutcome {
    RestorationResult result;
    Json manifest;
};

inline std::string trace_csv(const EnergyTrace& trace)
{
    std::string out = "iteration,total_energy,mean_fidelity,mean_quality,reward,J_size\n";
    for (const auto& r : trace) {
        out += std::to_string(r.iteration) + ',' + detail::csv_number(r.total) + ',' + detail::csv_number(r.mean_fidelity) +
               ',' + detail::csv_number(r.mean_quality) + ',' + detail::csv_number(r.reward) + ',' +
               std::to_string(r.subsample_size) + '\n';
    }
    return out;
}

inline RestoreOutcome cmd_restore(const RestoreRequest& req)
{
    req.params.validate();
    const FrameStack stack = read_frame_directory(req.frames_dir);
    const auto t0 = std::chrono::steady_clock::now();
    RestoreOutcome out{restore(stack, req.params), {}};
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    detail::ensure_directory(req.out_dir);

    write_png(req.out_dir / "restored.png", out.result.image);
    detail::write_text(req.out_dir / "subsample.json", Json(out.result.subsample.one_based()).dump() + "\n");
    detail::write_text(req.out_dir / "trace.csv", trace_csv(out.result.trace));

    Json params = to_json(req.params);
    params["tau_resolved"] = out.result.tau;
    out.manifest = Json{{"subcommand", "restore"},
                        {"tool_version", kToolVersion},
                        {"input", req.frames_dir.string()},
                        {"output_dir", req.out_dir.string()},
                        {"seed", req.seed},
                        {"params", params},
                        {"n_frames", stack.size()},
                        {"iterations", out.result.iterations},
                        {"converged", out.result.converged},
                        {"inner_solvers_converged", out.result.solver_converged},
                        {"artifacts", {"restored.png", "subsample.json", "trace.csv"}}};
    detail::write_text(req.out_dir / "manifest.json", out.manifest.dump(2) + "\n");
    // Wall-clock time varies run to run, so it is reported but kept out of the manifest.
    out.manifest["elapsed_seconds"] = elapsed;
    return out;
}

// --- evaluate ---------------------------------------------------------------

struct EvaluateRequest {
    fs::path restored;
    fs::path truth;
    fs::path out;  ///< metrics.json path; a directory gets metrics.json inside
};

inline MetricReport cmd_evaluate(const EvaluateRequest& req)
{
    const Frame a = read_image(req.restored);
    const Frame b = read_image(req.truth);
    require_same_shape(a, b);
    const auto t0 = std::chrono::steady_clock::now();
    MetricReport m;
    m.psnr_db = psnr(a, b);
    m.ssim = ssim(a, b);
    m.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    fs::path target = req.out;
    if (target.empty()) {
        target = "metrics.json";
    } else if (fs::is_directory(target) || !target.has_extension()) {
        detail::ensure_directory(target);
        target /= "metrics.json";
    }
    const Json doc{{"psnr_db", detail::number(m.psnr_db)},
                   {"ssim", m.ssim},
                   {"restored", req.restored.string()},
                   {"truth", req.truth.string()},
                   {"tool_version", kToolVersion}};
    detail::write_text(target, doc.dump(2) + "\n");
    return m;
}

// --- oracle -----------------------------------------------------------------

struct OracleReport {
    Selection sorted;
    Selection exhaustive;
    double gap = 0.0;
    SeparationDiagnostics diagnostics;
    double tau = 0.0;
    bool lowrank_bound_computed = false;
};

/// Largest stack for which the oracle also runs one RPCA per subsample to bound l.
inline constexpr std::size_t kLowRankOracleLimit = 10;

/**
 * Compares sorted-prefix and exhaustive selection on the first J-step of the
 * chosen model (reference image = initial image). For LIRIS the energies use
 * the whole-stack low-rank part and, up to kLowRankOracleLimit frames, l is the
 * largest per-subset low-rank column deviation; other models have l = 0.
 */
inline OracleReport oracle_report(const FrameStack& stack, const ModelParams& params)
{
    params.validate();
    if (stack.size() > kBruteForceLimit) {
        throw Error("oracle size limit: at most 20 frames, got " + std::to_string(stack.size()));
    }
    const Matrix data = stack_matrix(stack);
    std::vector<double> quality;
    Matrix reference_cols = data;
    Frame reference;
    if (is_tv_model(params.model)) {
        quality = tv_quality(stack, params.model == Model::TVIRIS_Iso ? TvVariant::Iso : TvVariant::Aniso).values;
    } else {
        quality = sharpness_quality(stack).values;
    }
    if (params.model == Model::LIRIS) {
        LowRankCache cache(data, params.rpca);
        reference_cols = cache.lowrank(SubsampleSet::all(stack.size()));
        reference = detail::column_mean(reference_cols, stack.rows(), stack.cols());
    } else {
        reference = temporal_mean(stack, SubsampleSet::all(stack.size()));
    }
    const auto energies = detail::frame_energies(reference, reference_cols, quality, params.lambda);

    OracleReport r;
    r.tau = resolve_tau(params, energies);
    r.sorted = select_subsample(energies, r.tau, params.rho);
    r.exhaustive = brute_force_select(energies, r.tau, params.rho);
    r.gap = r.sorted.energy - r.exhaustive.energy;
    double l = 0.0;
    if (params.model == Model::LIRIS && stack.size() <= kLowRankOracleLimit) {
        l = exhaustive_lowrank_jstep(stack, reference, params, r.tau).lowrank_deviation;
        r.lowrank_bound_computed = true;
    } else if (params.model != Model::LIRIS) {
        r.lowrank_bound_computed = true;
    }
    r.diagnostics = separation_diagnostics(reference, reference_cols, l, energies, r.tau, params.rho);
    return r;
}

inline Json to_json(const OracleReport& r)
{
    const auto& d = r.diagnostics;
    auto verdict = [&](bool holds, double gap) -> Json {
        if (!r.lowrank_bound_computed || !(gap > 0.0)) return "unverifiable";
        return holds;
    };
    return Json{{"sorted_selection", r.sorted.subset.one_based()},
                {"sorted_energy", r.sorted.energy},
                {"exhaustive_selection", r.exhaustive.subset.one_based()},
                {"exhaustive_energy", r.exhaustive.energy},
                {"energy_gap", r.gap},
                {"tau", r.tau},
                {"separation",
                 {{"d_E", detail::number(d.d_E)},
                  {"d_S", detail::number(d.d_S)},
                  {"l", r.lowrank_bound_computed ? detail::number(d.l) : Json(nullptr)},
                  {"M", detail::number(d.M)},
                  {"cardinality_condition", verdict(d.cardinality_condition, d.d_E)},
                  {"subset_condition", verdict(d.subset_condition, d.d_S)}}}};
}

struct OracleRequest {
    fs::path frames_dir;
    ModelParams params;
    fs::path out;  ///< optional JSON file
};

inline OracleReport cmd_oracle(const OracleRequest& req, std::ostream& os)
{
    const FrameStack stack = read_frame_directory(req.frames_dir);
    OracleReport r = oracle_report(stack, req.params);
    const std::string doc = to_json(r).dump(2) + "\n";
    os << doc;
    if (!req.out.empty()) {
        detail::write_text(req.out, doc);
    }
    return r;
}

}  // namespace turbrest
