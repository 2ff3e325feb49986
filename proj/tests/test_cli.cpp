#include "temp_dir.hpp"

#include "pectoral/cli.hpp"
#include "pectoral/image_io.hpp"
#include "pectoral/phantom.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

using namespace pectoral;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code = 0;
    std::string out, err;
};

CliRun cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "pectoral");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    CliRun r;
    r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

void spit(const fs::path& p, const std::string& text)
{
    std::ofstream f(p, std::ios::binary);
    f << text;
}

fs::path write_phantom(const TempDir& dir, const std::string& name, PhantomSpec spec)
{
    const Phantom ph = generate_phantom(spec);
    write_image(ph.image, dir / (name + ".png"));
    write_mask(ph.truth_pectoral, dir / (name + "_truth.png"));
    return dir / (name + ".png");
}

PhantomSpec small_straight()
{
    PhantomSpec s;
    s.edge = StraightEdge{60.0, 0.3};
    s.noise_sigma = 300.0;
    s.seed = 3;
    return s;
}

} // namespace

TEST(CliSegment, WritesAllOutputs)
{
    TempDir dir;
    const fs::path img = write_phantom(dir, "p", small_straight());
    const CliRun r = cli({"segment", img.string(), (dir / "out").string(), "--dump-stages"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    for (const char* f : {"mask.png", "boundary.txt", "overlay.png", "stats.json", "stages/01_breast.png"})
        EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
    EXPECT_EQ(r.out, (dir / "out" / "stats.json").generic_string() + "\n");

    const json stats = json::parse(slurp(dir / "out" / "stats.json"));
    EXPECT_TRUE(stats["pectoral_found"].get<bool>());
    EXPECT_EQ(stats["orientation"], "left");
    EXPECT_EQ(stats["area"].get<std::size_t>(), read_mask(dir / "out" / "mask.png").count());
    EXPECT_TRUE(stats.contains("timings_ms"));

    std::istringstream boundary(slurp(dir / "out" / "boundary.txt"));
    int x, y, lines = 0;
    while (boundary >> x >> y)
        ++lines;
    EXPECT_EQ(static_cast<std::size_t>(lines), stats["boundary_points"].get<std::size_t>());
    EXPECT_GT(lines, 0);
}

TEST(CliSegment, AbsentMuscleExitsTwoWithEmptyMask)
{
    TempDir dir;
    PhantomSpec s = small_straight();
    s.edge = AbsentEdge{};
    const fs::path img = write_phantom(dir, "cc", s);
    const CliRun r = cli({"segment", img.string(), (dir / "out").string(), "--no-timing"});
    EXPECT_EQ(r.code, kExitNoPectoral);
    EXPECT_FALSE(read_mask(dir / "out" / "mask.png").any());
    const json stats = json::parse(slurp(dir / "out" / "stats.json"));
    EXPECT_FALSE(stats["pectoral_found"].get<bool>());
    EXPECT_FALSE(stats.contains("timings_ms"));
}

TEST(CliSegment, MissingInputWritesNothing)
{
    TempDir dir;
    const CliRun r = cli({"segment", (dir / "nope.pgm").string(), (dir / "out").string()});
    EXPECT_EQ(r.code, kExitError);
    EXPECT_NE(r.err.find("read_image"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(CliSegment, ConfigFileAndFlagOverride)
{
    TempDir dir;
    const fs::path img = write_phantom(dir, "p", small_straight());
    spit(dir / "cfg.txt", "# tuned\nmuscle_threshold = kapur\nwindow_upper_percentile = 0.7\n");
    const CliRun r = cli({"segment", img.string(), (dir / "out").string(), "--config", (dir / "cfg.txt").string(),
                       "--window-percentile", "0.8"});
    ASSERT_NE(r.code, kExitError) << r.err;
    const json cfg = json::parse(slurp(dir / "out" / "stats.json"))["config"];
    EXPECT_EQ(cfg["muscle_threshold"], "kapur");
    EXPECT_DOUBLE_EQ(cfg["window_upper_percentile"].get<double>(), 0.8);

    spit(dir / "bad.txt", "no_such_key = 1\n");
    EXPECT_EQ(cli({"segment", img.string(), (dir / "o2").string(), "--config", (dir / "bad.txt").string()}).code,
              kExitError);
    EXPECT_EQ(cli({"segment", img.string(), (dir / "o3").string(), "--marker-rows", "1.5"}).code, kExitError);
}

TEST(CliSegment, ConfigKeyValueRoundTrip)
{
    PipelineConfig c;
    c.window_mode = WindowMode::HistogramPercentile;
    c.connectivity = Connectivity::Four;
    c.muscle_threshold = MuscleThreshold::Kapur;
    c.min_pectoral_contrast = 2.5;
    const PipelineConfig back = apply_config_file(config_to_key_values(c), {});
    EXPECT_EQ(config_to_key_values(back).serialize(), config_to_key_values(c).serialize());
}

TEST(CliValidate, GeneratedSuiteReport)
{
    TempDir dir;
    spit(dir / "suite.txt", "seed = 4\nstraight = 3\ncurved = 3\n");
    const CliRun r = cli({"validate", (dir / "suite.txt").string(), (dir / "r.json").string(), "--jobs", "3"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_EQ(r.out, (dir / "r.json").generic_string() + "\n");
    const auto rep = nlohmann::ordered_json::parse(slurp(dir / "r.json"));
    ASSERT_EQ(rep["records"].size(), 6u);
    EXPECT_EQ(rep["aggregate"]["count"], 6);
    EXPECT_EQ(rep["aggregate"]["labeled"], 6);
    EXPECT_TRUE(rep["records"][0]["path"].is_null());
    EXPECT_TRUE(fs::exists(dir / "r.csv"));

    std::vector<std::string> keys;
    for (auto it = rep.begin(); it != rep.end(); ++it)
        keys.push_back(it.key());
    EXPECT_EQ(keys, (std::vector<std::string>{"schema_version", "suite", "config", "timing", "records", "aggregate"}));
}

TEST(CliValidate, EmptyDirectoryGivesEmptyReport)
{
    TempDir dir;
    fs::create_directories(dir / "empty");
    const CliRun r = cli({"validate", (dir / "empty").string(), (dir / "r.json").string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const json rep = json::parse(slurp(dir / "r.json"));
    EXPECT_TRUE(rep["records"].empty());
    EXPECT_EQ(rep["aggregate"]["count"], 0);
}

TEST(CliValidate, CorruptFileIsIsolated)
{
    TempDir dir;
    fs::create_directories(dir / "corpus");
    for (int i = 0; i < 2; ++i) {
        PhantomSpec s = small_straight();
        s.seed = 20 + i;
        const Phantom ph = generate_phantom(s);
        write_image(ph.image, dir / "corpus" / ("img" + std::to_string(i) + ".png"));
    }
    spit(dir / "corpus" / "broken.pgm", "P5\n100 100\n255\nshort");
    const CliRun r = cli({"validate", (dir / "corpus").string(), (dir / "r.json").string(), "--no-timing"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const json rep = json::parse(slurp(dir / "r.json"));
    ASSERT_EQ(rep["records"].size(), 3u);
    EXPECT_EQ(rep["aggregate"]["failed"], 1);
    EXPECT_EQ(rep["aggregate"]["labeled"], 0);
    const json& broken = rep["records"][0];
    EXPECT_EQ(broken["id"], "broken.pgm");
    EXPECT_EQ(broken["status"], "failed");
    EXPECT_NE(broken["error"].get<std::string>().find("read_image"), std::string::npos);
    EXPECT_TRUE(rep["records"][1]["evaluation"].is_null());
}

TEST(CliValidate, ManifestWithTruth)
{
    TempDir dir;
    write_phantom(dir, "a", small_straight());
    spit(dir / "list.txt", "# image truth\na.png a_truth.png\n");
    const CliRun r = cli({"validate", (dir / "list.txt").string(), (dir / "r.json").string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const json rep = json::parse(slurp(dir / "r.json"));
    ASSERT_EQ(rep["records"].size(), 1u);
    EXPECT_GE(rep["records"][0]["evaluation"]["dice"].get<double>(), 0.95);
}

TEST(CliValidate, NoTimingReportsAreByteIdentical)
{
    TempDir dir;
    spit(dir / "suite.txt", "seed = 11\nstraight = 2\ncurved = 2\n");
    ASSERT_EQ(cli({"validate", (dir / "suite.txt").string(), (dir / "a.json").string(), "--no-timing", "--jobs", "1"}).code, 0);
    ASSERT_EQ(cli({"validate", (dir / "suite.txt").string(), (dir / "b.json").string(), "--no-timing", "--jobs", "4"}).code, 0);
    const std::string a = slurp(dir / "a.json");
    EXPECT_EQ(a, slurp(dir / "b.json"));
    EXPECT_EQ(a.find("_ms"), std::string::npos);
}

TEST(CliValidate, MissingSuiteFails)
{
    TempDir dir;
    EXPECT_EQ(cli({"validate", (dir / "nothing").string(), (dir / "r.json").string()}).code, kExitError);
}

TEST(CliPhantom, ReproducibleSeries)
{
    TempDir a, b, c;
    ASSERT_EQ(cli({"phantom", "mixed", a.path().string(), "--count", "10", "--seed", "7"}).code, 0);
    ASSERT_EQ(cli({"phantom", "mixed", b.path().string(), "--count", "10", "--seed", "7"}).code, 0);
    ASSERT_EQ(cli({"phantom", "mixed", c.path().string(), "--count", "10", "--seed", "8"}).code, 0);
    for (int i = 0; i < 10; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "phantom_%03d.png", i);
        EXPECT_EQ(read_image(a / name), read_image(b / name)) << name;
    }
    EXPECT_NE(read_image(a / "phantom_000.png"), read_image(c / "phantom_000.png"));
    EXPECT_EQ(slurp(a / "manifest.txt"), slurp(b / "manifest.txt"));
}

TEST(CliPhantom, ZeroCountWritesOnlyManifest)
{
    TempDir dir;
    const CliRun r = cli({"phantom", "straight", dir.path().string(), "--count", "0"});
    ASSERT_EQ(r.code, kExitOk);
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path()))
        ++files;
    EXPECT_EQ(files, 1u);
    EXPECT_TRUE(fs::exists(dir / "manifest.txt"));
}

TEST(CliPhantom, SpecFileAndInvalidSpec)
{
    TempDir dir;
    PhantomSpec s = small_straight();
    spit(dir / "ok.spec", s.to_key_values().serialize());
    ASSERT_EQ(cli({"phantom", (dir / "ok.spec").string(), (dir / "out").string(), "--format", "pgm",
                   "--seed", "3"}).code,
              kExitOk);
    EXPECT_EQ(read_image(dir / "out" / "phantom_000.pgm"), generate_phantom(s).image);

    s.pectoral_level = 100;
    spit(dir / "bad.spec", s.to_key_values().serialize());
    const CliRun r = cli({"phantom", (dir / "bad.spec").string(), (dir / "out2").string()});
    EXPECT_EQ(r.code, kExitError);
    EXPECT_FALSE(r.err.empty());
}

TEST(CliPhantom, GeneratedCorpusValidates)
{
    TempDir dir;
    ASSERT_EQ(cli({"phantom", "curved", (dir / "corpus").string(), "--count", "3", "--seed", "2"}).code, 0);
    const CliRun r = cli({"validate", (dir / "corpus").string(), (dir / "r.json").string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const json rep = json::parse(slurp(dir / "r.json"));
    EXPECT_EQ(rep["aggregate"]["labeled"], 3);
}

TEST(Cli, UsageErrors)
{
    EXPECT_EQ(cli({}).code, kExitError);
    EXPECT_EQ(cli({"frobnicate"}).code, kExitError);
    EXPECT_EQ(cli({"--help"}).code, kExitOk);
}
