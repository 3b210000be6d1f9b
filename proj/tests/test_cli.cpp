#include "turbrest/commands.hpp"

#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

using namespace turbrest;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / "turbrest_cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Json read_json(const fs::path& p) { return Json::parse(slurp(p)); }

/// Runs the built CLI; returns its exit status.
int run(const std::string& args, const fs::path& log = {})
{
    std::string cmd = std::string(TURBREST_CLI_PATH) + " " + args;
    cmd += log.empty() ? " >/dev/null 2>&1" : " >" + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<double> total_energy_column(const fs::path& csv)
{
    std::istringstream in(slurp(csv));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "iteration,total_energy,mean_fidelity,mean_quality,reward,J_size");
    std::vector<double> out;
    while (std::getline(in, line)) {
        std::istringstream row(line);
        std::string cell;
        std::getline(row, cell, ',');
        std::getline(row, cell, ',');
        out.push_back(std::stod(cell));
    }
    return out;
}

fs::path write_truth(const fs::path& dir, Eigen::Index size = 32)
{
    const fs::path p = dir / "truth.png";
    write_png(p, fixtures::scene(size, size));
    return p;
}

fs::path simulate_into(const fs::path& dir, std::size_t n, std::uint64_t seed, Eigen::Index size = 32)
{
    fs::create_directories(dir);
    SimulateRequest req;
    req.truth = write_truth(dir, size);
    req.config.n_frames = n;
    req.config.seed = seed;
    req.out_dir = dir / "frames";
    cmd_simulate(req);
    return req.out_dir;
}

}  // namespace

TEST(CmdSimulate, StillSequenceReproducesTheInput)
{
    const fs::path dir = scratch("still");
    SimulateRequest req;
    req.truth = write_truth(dir);
    req.config.n_frames = 1;
    req.config.severe_strength = {0.0, 0.0};
    req.config.mild_strength = {0.0, 0.0};
    req.config.blur_sigma = 0.0;
    req.out_dir = dir / "out";
    cmd_simulate(req);
    EXPECT_EQ(read_png(req.out_dir / "frame_0001.png"), read_png(req.truth));
}

TEST(CmdSimulate, FixedSeedGivesIdenticalFiles)
{
    const fs::path dir = scratch("seed");
    ASSERT_EQ(run("simulate --truth " + write_truth(dir).string() + " --out " + (dir / "a").string() +
                  " --n-frames 4 --seed 11 --write-fields"),
              0);
    ASSERT_EQ(run("simulate --truth " + (dir / "truth.png").string() + " --out " + (dir / "b").string() +
                  " --n-frames 4 --seed 11 --write-fields"),
              0);
    for (const char* name : {"frame_0001.png", "frame_0004.png", "field_0002.bin", "config.txt"}) {
        EXPECT_EQ(slurp(dir / "a" / name), slurp(dir / "b" / name)) << name;
    }
    const MotionField f = read_motion_field(dir / "a" / "field_0002.bin");
    EXPECT_EQ(f.u.rows(), 32);
    EXPECT_TRUE(f.v.allFinite());
}

TEST(CmdSimulate, ManifestRecordsTheSevereFrames)
{
    const fs::path dir = scratch("severe");
    SimulateRequest req;
    req.truth = write_truth(dir, 16);
    req.config.n_frames = 100;
    req.config.severe_fraction = 0.7;
    req.out_dir = dir / "out";
    cmd_simulate(req);
    const Json m = read_json(req.out_dir / "manifest.json");
    EXPECT_EQ(m["severe_indices"].size(), 70u);
    EXPECT_EQ(m["subcommand"], "simulate");
    EXPECT_EQ(m["turbulence_config"]["n_frames"], 100);
    EXPECT_EQ(turbulence_config_from_key_value(slurp(req.out_dir / "config.txt")).n_frames, 100u);
}

TEST(CmdRestore, SingleFrameDirectory)
{
    const fs::path dir = scratch("single");
    fs::create_directories(dir / "frames");
    write_png(dir / "frames" / "only.png", fixtures::scene(16, 16));
    RestoreRequest req{dir / "frames", {}, dir / "out"};
    cmd_restore(req);
    EXPECT_EQ(read_png(dir / "out" / "restored.png"), read_png(dir / "frames" / "only.png"));
    EXPECT_EQ(read_json(dir / "out" / "subsample.json"), Json::array({1}));
}

TEST(CmdRestore, IrisTraceIsNonIncreasing)
{
    const fs::path dir = scratch("trace");
    const fs::path frames = simulate_into(dir, 20, 3);
    ASSERT_EQ(run("restore " + frames.string() + " --out " + (dir / "out").string()), 0);
    const auto e = total_energy_column(dir / "out" / "trace.csv");
    ASSERT_FALSE(e.empty());
    for (std::size_t t = 1; t < e.size(); ++t) EXPECT_LE(e[t], e[t - 1]);
    const Json m = read_json(dir / "out" / "manifest.json");
    EXPECT_EQ(m["params"]["model"], "iris");
    EXPECT_TRUE(m["converged"].get<bool>());
}

TEST(CmdRestore, LirisOnIdenticalFrames)
{
    const fs::path dir = scratch("liris");
    fs::create_directories(dir / "frames");
    const Frame f = fixtures::scene(12, 12);
    for (int k = 1; k <= 4; ++k) write_png(dir / "frames" / ("f" + std::to_string(k) + ".png"), f);
    ASSERT_EQ(run("restore " + (dir / "frames").string() + " --model liris --out " + (dir / "out").string()), 0);
    const Frame r = read_png(dir / "out" / "restored.png");
    const Frame in = read_png(dir / "frames" / "f1.png");
    EXPECT_LE((r - in).cwiseAbs().maxCoeff() * 255.0, 1.0 + 1e-9);
}

TEST(CmdRestore, ReproducibleFromItsManifest)
{
    const fs::path dir = scratch("repro");
    const fs::path frames = simulate_into(dir, 12, 5);
    ASSERT_EQ(run("restore " + frames.string() + " --model tviris-iso --lambda 2 --out " + (dir / "a").string()), 0);
    const Json p = read_json(dir / "a" / "manifest.json")["params"];
    std::ostringstream args;
    args << "restore " << frames.string() << " --model " << p["model"].get<std::string>() << " --lambda "
         << p["lambda"].get<double>() << " --rho " << p["rho"].get<double>() << " --mu " << p["mu"].get<double>()
         << " --gamma " << p["gamma"].get<double>() << " --epsilon " << p["epsilon"].get<double>() << " --max-outer "
         << p["max_outer"].get<int>() << " --out " << (dir / "b").string();
    ASSERT_EQ(run(args.str()), 0);
    for (const char* name : {"restored.png", "subsample.json", "trace.csv", "manifest.json"}) {
        if (std::string(name) == "manifest.json") {
            Json ja = read_json(dir / "a" / name), jb = read_json(dir / "b" / name);
            ja.erase("output_dir");
            jb.erase("output_dir");
            EXPECT_EQ(ja, jb);
            continue;
        }
        EXPECT_EQ(slurp(dir / "a" / name), slurp(dir / "b" / name)) << name;
    }
}

TEST(CmdRestore, ExitCodes)
{
    const fs::path dir = scratch("exit");
    const fs::path frames = simulate_into(dir, 15, 8);
    EXPECT_EQ(run("restore " + frames.string() + " --max-outer 1 --tau 1 --out " + (dir / "o1").string()), 2);
    EXPECT_TRUE(fs::exists(dir / "o1" / "restored.png"));
    EXPECT_EQ(run("restore " + frames.string() + " --max-outer 1 --tau 1 --allow-nonconverged --out " +
                  (dir / "o2").string()),
              0);
    EXPECT_EQ(run("restore " + frames.string() + " --model nope --out " + (dir / "o3").string()), 1);
    EXPECT_EQ(run("restore " + frames.string() + " --epsilon 0 --out " + (dir / "o4").string()), 1);
    EXPECT_EQ(run("restore " + (dir / "missing").string() + " --out " + (dir / "o5").string()), 1);
    EXPECT_EQ(run("frobnicate"), 1);
    EXPECT_EQ(run("--help"), 0);

    fs::create_directories(dir / "mixed");
    write_png(dir / "mixed" / "a.png", Frame::Zero(4, 4));
    write_png(dir / "mixed" / "b.png", Frame::Zero(5, 4));
    EXPECT_EQ(run("restore " + (dir / "mixed").string() + " --out " + (dir / "o6").string(), dir / "mixed.log"), 2);
    EXPECT_NE(slurp(dir / "mixed.log").find("b.png"), std::string::npos);
}

TEST(CmdEvaluate, IdenticalFiles)
{
    const fs::path dir = scratch("eval_same");
    const fs::path truth = write_truth(dir);
    ASSERT_EQ(run("evaluate " + truth.string() + " " + truth.string() + " --out " + (dir / "m.json").string()), 0);
    const Json m = read_json(dir / "m.json");
    EXPECT_EQ(m["psnr_db"], "inf");
    EXPECT_EQ(m["ssim"].get<double>(), 1.0);
}

TEST(CmdEvaluate, BlackVersusMidGray)
{
    const fs::path dir = scratch("eval_gray");
    // maxval 2 makes the sample value 1 exactly one half.
    auto pgm = [&](const char* name, unsigned char v) {
        std::ofstream out(dir / name, std::ios::binary);
        out << "P5\n16 16\n2\n" << std::string(256, static_cast<char>(v));
    };
    pgm("black.pgm", 0);
    pgm("gray.pgm", 1);
    const MetricReport m = cmd_evaluate({dir / "black.pgm", dir / "gray.pgm", dir});
    EXPECT_NEAR(m.psnr_db, 6.0206, 5e-5);
    EXPECT_NEAR(read_json(dir / "metrics.json")["psnr_db"].get<double>(), 6.0206, 5e-5);
    EXPECT_THROW(cmd_evaluate({dir / "black.pgm", write_truth(dir), dir}), Error);
}

TEST(CmdEvaluate, EndToEndIsStable)
{
    const fs::path dir = scratch("e2e");
    std::string metrics[2];
    for (int run_id = 0; run_id < 2; ++run_id) {
        const fs::path sub = dir / std::to_string(run_id);
        const fs::path frames = simulate_into(sub, 10, 21);
        cmd_restore({frames, {}, sub / "out"});
        cmd_evaluate({sub / "out" / "restored.png", sub / "truth.png", sub / "metrics.json"});
        Json m = read_json(sub / "metrics.json");
        metrics[run_id] = Json{{"psnr_db", m["psnr_db"]}, {"ssim", m["ssim"]}}.dump();
    }
    EXPECT_EQ(metrics[0], metrics[1]);
}

TEST(CmdOracle, SingleFrameHasNoGap)
{
    const fs::path dir = scratch("oracle1");
    fs::create_directories(dir / "frames");
    write_png(dir / "frames" / "a.png", fixtures::scene(8, 8));
    std::ostringstream os;
    const auto r = cmd_oracle({dir / "frames", {}, {}}, os);
    EXPECT_EQ(r.gap, 0.0);
    EXPECT_EQ(Json::parse(os.str())["energy_gap"], 0.0);
}

TEST(CmdOracle, RandomTenFrames)
{
    const fs::path dir = scratch("oracle10");
    fs::create_directories(dir / "frames");
    std::mt19937_64 rng(4);
    for (int k = 0; k < 10; ++k)
        write_png(dir / "frames" / ("f" + std::to_string(k) + ".png"), fixtures::uniform_frame(rng, 12, 12));
    ASSERT_EQ(run("oracle " + (dir / "frames").string() + " --out " + (dir / "report.json").string()), 0);
    const Json rep = read_json(dir / "report.json");
    EXPECT_LE(std::abs(rep["energy_gap"].get<double>()), 1e-12);
    EXPECT_EQ(rep["sorted_selection"], rep["exhaustive_selection"]);
}

TEST(CmdOracle, DuplicatedEnergiesAreUnverifiable)
{
    const fs::path dir = scratch("oracle_dup");
    fs::create_directories(dir / "frames");
    const Frame f = fixtures::scene(8, 8);
    for (int k = 0; k < 3; ++k) write_png(dir / "frames" / ("f" + std::to_string(k) + ".png"), f);
    std::ostringstream os;
    const auto r = cmd_oracle({dir / "frames", {}, {}}, os);
    EXPECT_EQ(r.diagnostics.d_E, 0.0);
    const Json rep = Json::parse(os.str());
    EXPECT_EQ(rep["separation"]["d_E"], 0.0);
    EXPECT_EQ(rep["separation"]["cardinality_condition"], "unverifiable");
}

TEST(CmdOracle, SizeLimit)
{
    const fs::path dir = scratch("oracle_big");
    fs::create_directories(dir / "frames");
    for (int k = 0; k < 21; ++k) {
        std::ostringstream name;
        name << "f" << std::setw(2) << std::setfill('0') << k << ".png";
        write_png(dir / "frames" / name.str(), Frame::Constant(4, 4, k / 40.0));
    }
    EXPECT_EQ(run("oracle " + (dir / "frames").string()), 2);
}
