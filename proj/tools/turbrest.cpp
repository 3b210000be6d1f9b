// turbrest: simulate turbulence-degraded sequences, restore them, evaluate results.
//
// Exit codes: 0 success, 1 usage error, 2 runtime error (including a restore
// that did not converge without --allow-nonconverged).

#include "turbrest/commands.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kUsageError = 1;
constexpr int kRuntimeError = 2;

struct UsageError : turbrest::Error {
    using turbrest::Error::Error;
};

struct ParamFlags {
    std::string model = "iris";
    turbrest::ModelParams params;
    std::optional<double> tau, beta, alpha0, dual_step;

    void attach(CLI::App* app)
    {
        app->add_option("--model", model, "iris | liris | tviris-aniso | tviris-iso")
            ->check(CLI::IsMember({"iris", "liris", "tviris-aniso", "tviris-iso"}))
            ->capture_default_str();
        app->add_option("--lambda", params.lambda, "quality weight")->capture_default_str();
        app->add_option("--tau", tau, "subsample-size reward weight (default: median first-iteration energy)");
        app->add_option("--rho", params.rho, "reward curvature")->capture_default_str();
        app->add_option("--mu", params.mu, "TV weight (tviris)")->capture_default_str();
        app->add_option("--gamma", params.gamma, "splitting penalty (tviris)")->capture_default_str();
        app->add_option("--beta", beta, "RPCA sparse weight (default 1/sqrt(max(rows, cols)))");
        app->add_option("--alpha0", alpha0, "initial RPCA penalty (default 1.25/||M||_2)");
        app->add_option("--epsilon", params.epsilon, "outer stopping tolerance")->capture_default_str();
        app->add_option("--max-outer", params.max_outer, "outer iteration cap")->capture_default_str();
        app->add_option("--dual-step", dual_step, "TV multiplier step (default 2*gamma)");
    }

    turbrest::ModelParams resolve() const
    {
        turbrest::ModelParams p = params;
        p.model = turbrest::parse_model(model);
        p.tau = tau;
        p.rpca.beta = beta;
        p.rpca.alpha0 = alpha0;
        p.tv.dual_step = dual_step;
        try {
            p.validate();
        } catch (const turbrest::Error& e) {
            throw UsageError(e.what());
        }
        return p;
    }
};

struct SimulateFlags {
    std::string truth, out, config_file, preset = "default";
    std::optional<std::size_t> n_frames;
    std::optional<double> severe_fraction, patch_sigma, jitter, blur_sigma, noise_sigma, mild_noise_sigma;
    std::vector<double> severe_strength, mild_strength;
    std::optional<int> patch_size, patch_divisor;
    std::optional<std::uint64_t> seed;
    bool write_fields = false;

    void attach(CLI::App* app)
    {
        app->add_option("--truth", truth, "ground-truth image (PNG or PGM)")->required()->check(CLI::ExistingFile);
        app->add_option("--out", out, "output directory")->required();
        app->add_option("--config", config_file, "key = value turbulence config file")->check(CLI::ExistingFile);
        app->add_option("--preset", preset, "default | noisy (two noise levels)")
            ->check(CLI::IsMember({"default", "noisy"}))
            ->capture_default_str();
        app->add_option("--n-frames", n_frames);
        app->add_option("--severe-fraction", severe_fraction);
        app->add_option("--severe-strength", severe_strength, "lo hi")->expected(2);
        app->add_option("--mild-strength", mild_strength, "lo hi")->expected(2);
        app->add_option("--patch-size", patch_size);
        app->add_option("--patch-divisor", patch_divisor, "one patch per this many pixels");
        app->add_option("--patch-sigma", patch_sigma, "patch Gaussian sigma (default patch-size/6)");
        app->add_option("--jitter", jitter, "max Gaussian mean offset in pixels");
        app->add_option("--blur-sigma", blur_sigma);
        app->add_option("--noise-sigma", noise_sigma, "noise on severe frames");
        app->add_option("--mild-noise-sigma", mild_noise_sigma, "noise on mild frames (default: --noise-sigma)");
        app->add_option("--seed", seed);
        app->add_flag("--write-fields", write_fields, "also write field_NNNN.bin displacement sidecars");
    }

    turbrest::TurbulenceConfig resolve() const
    {
        using turbrest::TurbulenceConfig;
        TurbulenceConfig c = preset == "noisy" ? TurbulenceConfig::noisy_preset() : TurbulenceConfig{};
        try {
            if (!config_file.empty()) {
                std::ifstream in(config_file);
                std::ostringstream text;
                text << in.rdbuf();
                c = turbrest::turbulence_config_from_key_value(text.str());
            }
            if (n_frames) c.n_frames = *n_frames;
            if (severe_fraction) c.severe_fraction = *severe_fraction;
            if (severe_strength.size() == 2) c.severe_strength = {severe_strength[0], severe_strength[1]};
            if (mild_strength.size() == 2) c.mild_strength = {mild_strength[0], mild_strength[1]};
            if (patch_size) c.patch_size = *patch_size;
            if (patch_divisor) c.patch_density_divisor = *patch_divisor;
            if (patch_sigma) c.patch_sigma = patch_sigma;
            if (jitter) c.center_jitter = *jitter;
            if (blur_sigma) c.blur_sigma = *blur_sigma;
            if (noise_sigma) c.noise_sigma = *noise_sigma;
            if (mild_noise_sigma) c.mild_noise_sigma = mild_noise_sigma;
            if (seed) c.seed = *seed;
            c.validate();
        } catch (const turbrest::Error& e) {
            throw UsageError(e.what());
        }
        return c;
    }
};

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Frame subsampling and restoration for turbulence-degraded image sequences"};
    app.set_version_flag("--version", turbrest::kToolVersion);
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "generate a degraded sequence from a sharp image");
    SimulateFlags sim_flags;
    sim_flags.attach(sim);

    auto* rest = app.add_subcommand("restore", "select frames and restore a latent image");
    std::string rest_frames, rest_out;
    std::uint64_t rest_seed = 0;
    bool allow_nonconverged = false;
    ParamFlags rest_params;
    rest->add_option("frames", rest_frames, "directory of PNG/PGM frames")->required()->check(CLI::ExistingDirectory);
    rest->add_option("--out", rest_out, "output directory")->required();
    rest->add_option("--seed", rest_seed, "recorded in the manifest");
    rest->add_flag("--allow-nonconverged", allow_nonconverged, "exit 0 even if the outer loop hit --max-outer");
    rest_params.attach(rest);

    auto* eval = app.add_subcommand("evaluate", "PSNR and SSIM of a restored image against the truth");
    std::string eval_restored, eval_truth, eval_out;
    eval->add_option("restored", eval_restored)->required()->check(CLI::ExistingFile);
    eval->add_option("truth", eval_truth)->required()->check(CLI::ExistingFile);
    eval->add_option("--out", eval_out, "metrics.json path or directory (default ./metrics.json)");

    auto* orc = app.add_subcommand("oracle", "compare sorted-prefix selection with exhaustive search");
    std::string orc_frames, orc_out;
    ParamFlags orc_params;
    orc->add_option("frames", orc_frames, "directory of at most 20 frames")->required()->check(CLI::ExistingDirectory);
    orc->add_option("--out", orc_out, "also write the report to this JSON file");
    orc_params.attach(orc);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsageError;
    }

    try {
        if (*sim) {
            turbrest::cmd_simulate({sim_flags.truth, sim_flags.resolve(), sim_flags.out, sim_flags.write_fields});
            return 0;
        }
        if (*rest) {
            const auto outcome = turbrest::cmd_restore({rest_frames, rest_params.resolve(), rest_out, rest_seed});
            const auto& r = outcome.result;
            std::cout << "model " << turbrest::to_string(rest_params.resolve().model) << ": |J| = " << r.subsample.size()
                      << ", " << r.iterations << " iterations, E = " << r.trace.back().total
                      << (r.converged ? "" : " (not converged)") << '\n';
            if (!r.converged && !allow_nonconverged) {
                std::cerr << "turbrest: restore did not converge within --max-outer iterations\n";
                return kRuntimeError;
            }
            return 0;
        }
        if (*eval) {
            const auto m = turbrest::cmd_evaluate({eval_restored, eval_truth, eval_out});
            std::cout << "psnr_db " << m.psnr_db << "\nssim " << m.ssim << '\n';
            return 0;
        }
        if (*orc) {
            turbrest::cmd_oracle({orc_frames, orc_params.resolve(), orc_out}, std::cout);
            return 0;
        }
    } catch (const UsageError& e) {
        std::cerr << "turbrest: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        std::cerr << "turbrest: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kUsageError;
}
