#include <vcrl/vectors.hpp>

#include <gtest/gtest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

const std::string cli = VCRL_CRL_SIM;
const std::string scenarios = VCRL_SCENARIO_DIR;
const std::string golden = VCRL_GOLDEN_DIR;

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string first_line(const fs::path& p)
{
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("vcrl_cli_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

Result run(const std::string& args, const fs::path& dir)
{
    const std::string cmd = cli + " " + args + " > " + (dir / "stdout").string() + " 2> " + (dir / "stderr").string();
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(dir / "stdout");
    r.err = slurp(dir / "stderr");
    return r;
}

} // namespace

TEST(Cli, MissingConfigKeyExitsTwo)
{
    const fs::path dir = scratch("missing");
    std::ofstream(dir / "bad.cfg") << "vehicles = 3\nduration = 10\nbandwidth = 1000\n";
    const Result r = run("simulate --config " + (dir / "bad.cfg").string() + " --out " + (dir / "o").string(), dir);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("revocation_rate"), std::string::npos) << r.err;
}

TEST(Cli, UnknownKeyAndMissingFileExitTwo)
{
    const fs::path dir = scratch("unknown");
    std::ofstream(dir / "bad.cfg") << slurp(scenarios + "/smoke.cfg") << "warp_speed = 9\n";
    EXPECT_EQ(run("simulate --config " + (dir / "bad.cfg").string(), dir).code, 2);
    EXPECT_EQ(run("simulate --config " + (dir / "nope.cfg").string(), dir).code, 2);
}

TEST(Cli, SimulateBothWritesGoldenHeaders)
{
    const fs::path dir = scratch("both");
    const fs::path out = dir / "o";
    const Result r = run("simulate --config " + scenarios + "/smoke.cfg --mode both --seeds 1 --out " + out.string(), dir);
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* run_dir : {"vehicle_centric_seed1", "baseline_seed1"}) {
        EXPECT_EQ(first_line(out / run_dir / "vehicles.csv"), first_line(golden + "/vehicles.header"));
        EXPECT_EQ(first_line(out / run_dir / "timeseries.csv"), first_line(golden + "/timeseries.header"));
        EXPECT_EQ(first_line(out / run_dir / "cdf.csv"), first_line(golden + "/cdf.header"));
        const auto summary = nlohmann::json::parse(slurp(out / run_dir / "summary.json"));
        EXPECT_TRUE(summary.at("mock_signatures").get<bool>());
    }
    EXPECT_EQ(first_line(out / "summary.csv"), first_line(golden + "/summary.header"));
    std::istringstream rows(slurp(out / "summary.csv"));
    std::string line;
    int n = 0;
    while (std::getline(rows, line)) {
        ++n;
        if (n > 1) {
            EXPECT_NE(line.substr(line.rfind(',') + 1), "") << line;
        }
    }
    EXPECT_EQ(n, 3);
    EXPECT_NE(r.out.find("p95_ratio"), std::string::npos);
    EXPECT_NE(r.err.find("mock"), std::string::npos);
}

TEST(Cli, RepeatedRunIsByteIdentical)
{
    const fs::path dir = scratch("repeat");
    for (const char* o : {"a", "b"}) {
        ASSERT_EQ(run("simulate --config " + scenarios + "/smoke.cfg --seed 4 --out " + (dir / o).string(), dir).code,
                  0);
    }
    for (const char* f : {"vehicles.csv", "timeseries.csv", "cdf.csv", "summary.json"}) {
        EXPECT_EQ(slurp(dir / "a" / "vehicle_centric_seed4" / f), slurp(dir / "b" / "vehicle_centric_seed4" / f)) << f;
    }
    EXPECT_EQ(slurp(dir / "a" / "summary.csv"), slurp(dir / "b" / "summary.csv"));
}

TEST(Cli, AnalyzeCalculators)
{
    const fs::path dir = scratch("analyze");
    Result r = run("analyze attack-cost --pk 1e-20:67", dir);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("4188"), std::string::npos) << r.out;
    r = run("analyze sync-period --ppm 20 --max-error 1", dir);
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("50000"), std::string::npos) << r.out;
    r = run("analyze fingerprint-size --n-max 20 --p 1e-25 --csv " + (dir / "fs.csv").string(), dir);
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(slurp(dir / "fs.csv").find("20,1e-25,300,400"), std::string::npos) << slurp(dir / "fs.csv");
}

TEST(Vectors, DeterministicAndSelfConsistent)
{
    const auto a = vcrl::make_vectors(1);
    EXPECT_EQ(a, vcrl::make_vectors(1));
    EXPECT_NE(a, vcrl::make_vectors(2));
    EXPECT_TRUE(vcrl::check_vectors(a).empty());
    auto broken = a;
    broken["credentials"]["expansion"][0] = std::string(64, '0');
    EXPECT_FALSE(vcrl::check_vectors(broken).empty());
}

TEST(Vectors, CliWritesSameFileTwice)
{
    const fs::path dir = scratch("vectors");
    ASSERT_EQ(run("vectors --out " + (dir / "a").string(), dir).code, 0);
    ASSERT_EQ(run("vectors --out " + (dir / "b").string(), dir).code, 0);
    EXPECT_EQ(slurp(dir / "a" / "vectors.json"), slurp(dir / "b" / "vectors.json"));
}
