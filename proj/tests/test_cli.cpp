#include "test_support.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct RunResult
{
    int code = -1;
    std::string output;
};

RunResult run(const std::string& args)
{
    const std::string cmd = std::string(POWERCAP_CLI_PATH) + " " + args + " 2>&1";
    RunResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe)
        return r;
    std::array<char, 4096> buf{};
    while (fgets(buf.data(), static_cast<int>(buf.size()), pipe))
        r.output += buf.data();
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::vector<std::string> read_lines(const fs::path& path)
{
    std::ifstream is(path);
    std::vector<std::string> lines;
    for (std::string line; std::getline(is, line);)
        lines.push_back(line);
    return lines;
}

// Scratch directory with a config that points at an empty artifact directory.
class ScratchConfig : public ::testing::Test
{
protected:
    void SetUp() override
    {
        dir_ = fs::temp_directory_path() /
               ("powercap_test_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_ / "artifacts");
        std::ofstream os(config());
        os << "{\"params\": \"" << (powercap::test::data_dir() / "default_params.json").string() << "\",\n"
           << " \"reference_cell\": \"" << (powercap::test::data_dir() / "reference_cell.json").string() << "\",\n"
           << " \"artifacts\": \"artifacts\",\n"
           << " \"fit\": {\"c_rates\": [1, 5]}}\n";
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path config() const { return dir_ / "config.json"; }
    fs::path dir_;
};

} // namespace

TEST(Cli, PredictFreshCellShortHorizon)
{
    const RunResult r = run("predict --soc 1.0 --h 10s");
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_NE(r.output.find("proposed"), std::string::npos);
    EXPECT_NE(r.output.find("binding current_bound"), std::string::npos) << r.output;
}

TEST(Cli, PredictBothMethods)
{
    const RunResult r = run("predict --soc 0.3 --h 5m --method both --oracle-rdt");
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_NE(r.output.find("proposed"), std::string::npos);
    EXPECT_NE(r.output.find("shortcut"), std::string::npos);
}

TEST(Cli, MissionWritesOneRowPerSecond)
{
    const fs::path out = fs::temp_directory_path() / "powercap_test_cli_mission.csv";
    const fs::path svg = fs::temp_directory_path() / "powercap_test_cli_mission.svg";
    const RunResult r = run("mission --h 10s,3m -o " + out.string() + " --svg " + svg.string());
    ASSERT_EQ(r.code, 0) << r.output;
    const auto lines = read_lines(out);
    ASSERT_EQ(lines.size(), 1081u);
    EXPECT_EQ(lines[0].rfind("time,current,voltage,temperature,i_max_10s,", 0), 0u) << lines[0];
    EXPECT_TRUE(fs::exists(svg));
    fs::remove(out);
    fs::remove(svg);
}

TEST(Cli, BenchWritesLongFormat)
{
    const fs::path out = fs::temp_directory_path() / "powercap_test_cli_bench.csv";
    const RunResult r = run("bench --h 10s,3m --cadence 120 -o " + out.string());
    ASSERT_EQ(r.code, 0) << r.output;
    const auto lines = read_lines(out);
    ASSERT_EQ(lines.size(), 5u);
    EXPECT_EQ(lines[0], "horizon,method,mean_s,std_s,iterations_mean");
    EXPECT_EQ(lines[1].rfind("10s,proposed,", 0), 0u) << lines[1];
    fs::remove(out);
}

TEST(Cli, UsageErrorsExitOne)
{
    EXPECT_EQ(run("").code, 1);
    EXPECT_EQ(run("frobnicate").code, 1);
    EXPECT_EQ(run("predict --soc").code, 1);
    EXPECT_EQ(run("predict --soc 1.5").code, 1);
    EXPECT_EQ(run("predict --h 3h").code, 1);
    EXPECT_EQ(run("mission --method exact").code, 1);
    EXPECT_EQ(run("-c /nonexistent/config.json predict").code, 1);
}

TEST(Cli, HelpExitsZero)
{
    const RunResult r = run("--help");
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.output.find("mission"), std::string::npos);
}

TEST_F(ScratchConfig, MissingArtifactsNamePrerequisite)
{
    const std::string c = "-c " + config().string() + " ";
    RunResult r = run(c + "mission --h 10s");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.output.find("train-nets"), std::string::npos) << r.output;
    r = run(c + "train-nets");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.output.find("gen-data"), std::string::npos) << r.output;
    r = run(c + "fit-params");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.output.find("gen-data"), std::string::npos) << r.output;
    // Physics-only mode still needs the RDT net unless the oracle replaces it.
    r = run(c + "predict --physics-only");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.output.find("train-rdt"), std::string::npos) << r.output;
    EXPECT_EQ(run(c + "predict --physics-only --oracle-rdt").code, 0);
}

TEST_F(ScratchConfig, GenDataThenFitParams)
{
    const std::string c = "-c " + config().string() + " ";
    RunResult r = run(c + "gen-data");
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_TRUE(fs::exists(dir_ / "artifacts" / "fit_data.csv"));
    r = run(c + "fit-params");
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_TRUE(fs::exists(dir_ / "artifacts" / "fitted_params.json"));
}
