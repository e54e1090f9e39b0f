#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>
#include <sys/wait.h>

#include "bsmm/bsm_io.hpp"
#include "bsmm/local_mm.hpp"
#include "oracles.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CliResult {
    int exit_code = -1;
    std::string out;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() /
               (std::string("bsmm_cli_") + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }

    void TearDown() override { fs::remove_all(dir_); }

    CliResult run(const std::string& args) const {
        const fs::path out = dir_ / "stdout.txt";
        const std::string cmd = std::string(BSMM_CLI_PATH) + " " + args + " > " +
                                out.string() + " 2> " + (dir_ / "stderr.txt").string();
        const int status = std::system(cmd.c_str());
        CliResult r;
        r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = slurp(out);
        return r;
    }

    fs::path path(const std::string& name) const { return dir_ / name; }

    fs::path dir_;
};

TEST_F(CliTest, HelpExitsZero) {
    EXPECT_EQ(run("--help").exit_code, 0);
    EXPECT_EQ(run("multiply --help").exit_code, 0);
}

TEST_F(CliTest, MissingSubcommandExitsTwo) {
    EXPECT_EQ(run("").exit_code, 2);
    EXPECT_EQ(run("frobnicate").exit_code, 2);
}

TEST_F(CliTest, GenWritesDeterministicFiles) {
    const std::string a1 = path("a1.bsm").string();
    const std::string a2 = path("a2.bsm").string();
    const CliResult r1 =
        run("gen --preset h2o-dft-ls --scale 0.01 --seed 5 -o " + a1);
    ASSERT_EQ(r1.exit_code, 0);
    const CliResult r2 =
        run("gen --preset h2o-dft-ls --scale 0.01 --seed 5 -o " + a2);
    ASSERT_EQ(r2.exit_code, 0);
    EXPECT_EQ(slurp(a1), slurp(a2));
    EXPECT_FALSE(slurp(a1).empty());

    // Stdout summary is parseable and counts match the file content.
    const json summary = json::parse(r1.out);
    const bsmm::BlockCsr m = bsmm::read_bsm(fs::path(a1));
    ASSERT_NO_THROW(m.validate());
    EXPECT_EQ(summary["block_rows"].get<std::size_t>(), m.layout().n_row_blocks());
    EXPECT_EQ(summary["blocks"].get<std::size_t>(), m.n_blocks());
    EXPECT_GT(summary["occupancy"].get<double>(), 0.0);
}

TEST_F(CliTest, GenRejectsBadInvocations) {
    EXPECT_EQ(run("gen --preset nope -o " + path("x.bsm").string()).exit_code, 2);
    EXPECT_EQ(run("gen --preset s-e").exit_code, 2);  // missing -o
    EXPECT_EQ(run("gen --preset s-e --scale 2.0 -o " + path("x.bsm").string()).exit_code,
              2);
}

TEST_F(CliTest, MultiplyWritesProductAndReport) {
    const std::string a = path("a.bsm").string();
    const std::string b = path("b.bsm").string();
    ASSERT_EQ(run("gen --preset h2o-dft-ls --scale 0.01 --seed 5 -o " + a).exit_code, 0);
    ASSERT_EQ(run("gen --preset h2o-dft-ls --scale 0.01 --seed 6 -o " + b).exit_code, 0);

    const std::string c = path("c.bsm").string();
    const std::string rep = path("rep.json").string();
    const CliResult r = run("multiply " + a + " " + b + " --eps 1e-8 -o " + c +
                            " --report " + rep);
    ASSERT_EQ(r.exit_code, 0);

    // The single-rank CLI product is bit-identical to the library multiply.
    const bsmm::BlockCsr ma = bsmm::read_bsm(fs::path(a));
    const bsmm::BlockCsr mb = bsmm::read_bsm(fs::path(b));
    const auto [want, stats] = bsmm::multiply_local(ma, mb, 1e-8);
    EXPECT_TRUE(bsmm::read_bsm(fs::path(c)).bit_identical(want));

    const json j = json::parse(slurp(rep));
    EXPECT_EQ(j["config"]["ranks"], 1);
    EXPECT_DOUBLE_EQ(j["config"]["eps"].get<double>(), 1e-8);
    ASSERT_EQ(j["runs"].size(), 1u);
    const json& run0 = j["runs"][0];
    const double pct_sum = run0["waitall_pct"].get<double>() +
                           run0["batch_pct"].get<double>() +
                           run0["other_pct"].get<double>();
    EXPECT_NEAR(pct_sum, 100.0, 0.5);
    EXPECT_EQ(run0["flops"].get<std::uint64_t>(), stats.flops);
    ASSERT_EQ(run0["rank_stats"].size(), 1u);
}

TEST_F(CliTest, DistributedMultiplyMatchesLocal) {
    const std::string a = path("a.bsm").string();
    const std::string b = path("b.bsm").string();
    ASSERT_EQ(run("gen --preset h2o-dft-ls --scale 0.01 --seed 7 -o " + a).exit_code, 0);
    ASSERT_EQ(run("gen --preset h2o-dft-ls --scale 0.01 --seed 8 -o " + b).exit_code, 0);

    const std::string c4 = path("c4.bsm").string();
    const std::string c4_again = path("c4_again.bsm").string();
    const std::string rep = path("rep.json").string();
    ASSERT_EQ(run("multiply " + a + " " + b + " --ranks 4 -o " + c4 + " --report " + rep)
                  .exit_code,
              0);
    ASSERT_EQ(run("multiply " + a + " " + b + " --ranks 4 -o " + c4_again).exit_code, 0);
    // Bit-reproducible end to end.
    EXPECT_EQ(slurp(c4), slurp(c4_again));

    const bsmm::BlockCsr ma = bsmm::read_bsm(fs::path(a));
    const bsmm::BlockCsr mb = bsmm::read_bsm(fs::path(b));
    const auto [want, stats] = bsmm::multiply_local(ma, mb, 0.0);
    EXPECT_TRUE(oracle::matrices_close(bsmm::read_bsm(fs::path(c4)).to_dense(),
                                       want.to_dense(), 1e-12));

    const json j = json::parse(slurp(rep));
    ASSERT_EQ(j["runs"][0]["rank_stats"].size(), 4u);
    std::uint64_t sent = 0, received = 0;
    for (const auto& rs : j["runs"][0]["rank_stats"]) {
        sent += rs["bytes_sent"].get<std::uint64_t>();
        received += rs["bytes_received"].get<std::uint64_t>();
        EXPECT_NEAR(rs["waitall_pct"].get<double>() + rs["batch_pct"].get<double>() +
                        rs["other_pct"].get<double>(),
                    100.0, 0.5);
    }
    EXPECT_EQ(sent, received);
    EXPECT_GT(sent, 0u);
}

TEST_F(CliTest, MultiplyFailureExitCodes) {
    const std::string b = path("b.bsm").string();
    ASSERT_EQ(run("gen --preset h2o-dft-ls --scale 0.01 --seed 6 -o " + b).exit_code, 0);

    // Missing operand file: I/O error.
    EXPECT_EQ(run("multiply " + path("missing.bsm").string() + " " + b).exit_code, 1);

    // Corrupt operand: format error.
    const fs::path garbage = path("garbage.bsm");
    std::ofstream(garbage) << "not a matrix";
    EXPECT_EQ(run("multiply " + garbage.string() + " " + b).exit_code, 1);

    // Bad parameters: usage error.
    EXPECT_EQ(run("multiply " + b + " " + b + " --ranks 3").exit_code, 2);
    EXPECT_EQ(run("multiply " + b + " " + b + " --eps -1").exit_code, 2);
    EXPECT_EQ(run("multiply " + b).exit_code, 2);  // missing positional
}

TEST_F(CliTest, BenchEmitsFullReportWithCsvTwin) {
    const std::string rep = path("bench.json").string();
    const CliResult r = run(
        "bench --preset h2o-dft-ls --scale 0.01 --seed 3 --eps 1e-6 --reps 2 --chain 2 "
        "--report " + rep);
    ASSERT_EQ(r.exit_code, 0);

    const json j = json::parse(slurp(rep));
    EXPECT_EQ(j["config"]["preset"], "h2o-dft-ls");
    EXPECT_EQ(j["config"]["chain"], 2);
    EXPECT_EQ(j["config"]["reps"], 2);
    ASSERT_EQ(j["runs"].size(), 2u);
    for (const auto& run_json : j["runs"]) {
        ASSERT_EQ(run_json["occupancy_trajectory"].size(), 2u);
        EXPECT_GT(run_json["flops"].get<std::uint64_t>(), 0u);
        EXPECT_NEAR(run_json["waitall_pct"].get<double>() +
                        run_json["batch_pct"].get<double>() +
                        run_json["other_pct"].get<double>(),
                    100.0, 0.5);
    }
    ASSERT_TRUE(j.contains("averaged"));
    EXPECT_GT(j["averaged"]["time_s"].get<double>(), 0.0);

    const std::string csv = slurp(path("bench.csv"));
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "run,time_s,waitall_pct,batch_pct,other_pct,flops,gflops,imbalance_pct");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);  // header + 2 runs
}

TEST_F(CliTest, BenchChainDefaultsToPreset) {
    // Chain 0 means "use the preset's chain length"; verified through the
    // config echo without running hundreds of steps (tiny scale, 1 rep).
    const std::string rep = path("bench.json").string();
    const CliResult r = run(
        "bench --preset amorph --scale 0.0026 --reps 1 --chain 3 --report " + rep);
    ASSERT_EQ(r.exit_code, 0);
    const json j = json::parse(slurp(rep));
    EXPECT_EQ(j["config"]["chain"], 3);
    EXPECT_EQ(j["runs"][0]["occupancy_trajectory"].size(), 3u);
}

TEST_F(CliTest, KernelsReportAndValidation) {
    const std::string rep = path("kern.json").string();
    const CliResult r =
        run("kernels --sizes 4:8:4 --working-set 64KiB --reps 1 --report " + rep);
    ASSERT_EQ(r.exit_code, 0);

    const json j = json::parse(slurp(rep));
    ASSERT_EQ(j["keys"].size(), 2u);
    EXPECT_EQ(j["keys"][0]["m"], 4);
    EXPECT_EQ(j["keys"][1]["m"], 8);
    EXPECT_GT(j["geomean_gflops"].get<double>(), 0.0);
    EXPECT_EQ(j["working_set_bytes"], 64 * 1024);
    const std::string csv = slurp(path("kern.csv"));
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "m,n,k,gflops");

    EXPECT_EQ(run("kernels --working-set 64XB").exit_code, 2);
    EXPECT_EQ(run("kernels --sizes 8:4:1").exit_code, 2);
    EXPECT_EQ(run("kernels --sizes 4:200:4").exit_code, 2);
}

TEST_F(CliTest, KernelsDefaultsPrintToStdout) {
    const CliResult r = run("kernels --sizes 5:5:1 --working-set 32KiB");
    ASSERT_EQ(r.exit_code, 0);
    const json j = json::parse(r.out);
    ASSERT_EQ(j["keys"].size(), 1u);
    EXPECT_EQ(j["keys"][0]["k"], 5);
}

}  // namespace
