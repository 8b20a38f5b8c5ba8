#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "varqqa/cli.hpp"

using namespace varqqa;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("varqqa_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }

    std::string write_config(const Json& j, const std::string& name = "config.json") {
        const auto path = (dir / name).string();
        write_text_file(path, j.dump());
        return path;
    }

    cli::Options options(const std::string& config) {
        cli::Options o;
        o.config_path = config;
        o.out_dir = (dir / "out").string();
        o.quiet = true;
        return o;
    }

    fs::path dir;
    std::ostringstream out, err;
};

Json mod22_solve() {
    return Json::parse(R"({"function":{"family":"mod","n":2,"m":2},
                           "circuit":{"t":1,"d_w":1,"partition":[2,1]},
                           "optimizer":{"restarts":3}})");
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_F(CliTest, SolveWritesRecordAndVerifies) {
    ASSERT_EQ(cli::cmd_solve(options(write_config(mod22_solve())), out, err), cli::kCertified) << err.str();
    ASSERT_TRUE(fs::exists(dir / "out" / "record.json"));
    ASSERT_TRUE(fs::exists(dir / "out" / "summary.txt"));
    EXPECT_NE(out.str().find("certified=true"), std::string::npos);

    cli::Options v;
    v.record_path = (dir / "out" / "record.json").string();
    std::ostringstream vout;
    EXPECT_EQ(cli::cmd_verify(v, vout, err), cli::kCertified);
    EXPECT_NE(vout.str().find("VERIFIED"), std::string::npos);
}

TEST_F(CliTest, SolveUncertifiedExitCode) {
    // Parity of three bits is not computable with one query.
    auto j = Json::parse(R"({"function":{"family":"mod","n":3,"m":2},"circuit":{"t":1,"d_w":1},
                             "optimizer":{"restarts":1,"max_iterations":50}})");
    EXPECT_EQ(cli::cmd_solve(options(write_config(j)), out, err), cli::kUncertified);
    EXPECT_TRUE(fs::exists(dir / "out" / "record.json"));
}

TEST_F(CliTest, InvalidConfigsAreInputErrors) {
    const std::vector<std::string> bad{
        R"({"function":{"family":"exact","n":4,"k":3,"l":2},"circuit":{"t":1}})",
        R"({"function":{"family":"mod","n":2,"m":2},"plan":{"t_min":3,"t_max":2}})",
        R"({"function":{"family":"mod","n":2,"m":2},"circuit":{"t":1,"d_w":1,"partition":[1,1,1]}})",
        R"({"function":{"family":"mod","n":2,"m":2},"circuit":{"t":1,"d_w":1,"partition":[3,1]}})",
        R"({"function":{"family":"mod","n":2,"m":2}})",
        R"({"function":{"family":"mod","n":2,"m":2},"circuit":{"t":"one"}})",
        R"({"function":{"family":"table","n":2,"entries":[["01",1],["01",0]]},"circuit":{"t":1}})",
        R"({"function":{"family":"mod","n":2,"m":2},"circuit":{"t":1},"optimizer":{"wolfe_c1":0.99}})",
    };
    for (const auto& text : bad) {
        const auto path = (dir / "bad.json").string();
        write_text_file(path, text);
        EXPECT_EQ(cli::cmd_solve(options(path), out, err), cli::kInputError) << text;
    }
    const auto missing = options((dir / "nope.json").string());
    EXPECT_EQ(cli::cmd_solve(missing, out, err), cli::kInputError);
    EXPECT_EQ(cli::cmd_search(options(write_config(mod22_solve())), out, err), cli::kInputError);
}

TEST_F(CliTest, EmptyQueryRangeIsRejectedBeforeWork) {
    auto j = Json::parse(R"({"function":{"family":"mod","n":2,"m":2},"plan":{"t_min":2,"t_max":1}})");
    EXPECT_EQ(cli::cmd_search(options(write_config(j)), out, err), cli::kInputError);
    EXPECT_NE(err.str().find("empty query range"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST_F(CliTest, VerifyRejectsBrokenRecords) {
    ASSERT_EQ(cli::cmd_solve(options(write_config(mod22_solve())), out, err), cli::kCertified);
    const auto rec_path = dir / "out" / "record.json";
    const std::string text = slurp(rec_path);

    cli::Options v;
    v.record_path = (dir / "missing.json").string();
    EXPECT_EQ(cli::cmd_verify(v, out, err), cli::kInputError);

    v.record_path = (dir / "truncated.json").string();
    write_text_file(v.record_path, text.substr(0, text.size() / 3));
    EXPECT_EQ(cli::cmd_verify(v, out, err), cli::kInputError);

    Json j = Json::parse(text);
    j["unitaries"][1][0][0][0] = j["unitaries"][1][0][0][0].get<double>() + 1e-3;
    v.record_path = (dir / "perturbed.json").string();
    write_text_file(v.record_path, j.dump());
    std::ostringstream vout;
    EXPECT_NE(cli::cmd_verify(v, vout, err), cli::kCertified);
    EXPECT_NE(vout.str().find("NOT VERIFIED"), std::string::npos);
}

TEST_F(CliTest, SearchWritesSummaryTable) {
    auto j = Json::parse(R"({"function":{"family":"mod","n":2,"m":2},
                             "plan":{"t_min":1,"t_max":2,"dw_max":2}})");
    ASSERT_EQ(cli::cmd_search(options(write_config(j)), out, err), cli::kCertified) << err.str();
    const auto csv = slurp(dir / "out" / "search_summary.csv");
    EXPECT_EQ(csv.rfind("t,d_w,partition,mean_error,max_error,certified,seconds\n", 0), 0u);
    EXPECT_NE(csv.find(",true,"), std::string::npos);
    EXPECT_NE(out.str().find("q_estimate=1"), std::string::npos);
}

TEST_F(CliTest, GramWritesOneCsvPerQuery) {
    auto j = Json::parse(R"({"function":{"family":"mod","n":3,"m":3},"circuit":{"t":2,"d_w":1},
                             "optimizer":{"restarts":1,"max_iterations":30}})");
    cli::cmd_solve(options(write_config(j)), out, err);
    cli::Options g;
    g.record_path = (dir / "out" / "record.json").string();
    g.out_dir = (dir / "gram").string();
    ASSERT_EQ(cli::cmd_gram(g, out, err), cli::kCertified) << err.str();
    EXPECT_TRUE(fs::exists(dir / "gram" / "gram_1.csv"));
    EXPECT_TRUE(fs::exists(dir / "gram" / "gram_2.csv"));
    EXPECT_FALSE(fs::exists(dir / "gram" / "gram_3.csv"));
    const auto csv = slurp(dir / "gram" / "gram_2.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 8);
    const Json doc = read_json_file((dir / "gram" / "gram.json").string());
    EXPECT_EQ(doc.at("gram").size(), 2u);
    EXPECT_EQ(doc.at("display_order").size(), 8u);
}

TEST_F(CliTest, SdpExport) {
    auto j = Json::parse(R"({"function":{"family":"exact","n":3,"k":1,"l":2},"circuit":{"t":2}})");
    const auto cfg = write_config(j);
    ASSERT_EQ(cli::cmd_sdp_export(options(cfg), out, err), cli::kCertified) << err.str();
    Json inst = read_json_file((dir / "out" / "sdp_instance.json").string());
    EXPECT_EQ(inst.at("t"), 2);
    EXPECT_EQ(inst.at("E").size(), 4u);

    auto o = options(cfg);
    o.t = 5;
    ASSERT_EQ(cli::cmd_sdp_export(o, out, err), cli::kCertified);
    inst = read_json_file((dir / "out" / "sdp_instance.json").string());
    EXPECT_EQ(inst.at("t"), 5);

    auto no_t = Json::parse(R"({"function":{"family":"mod","n":2,"m":2}})");
    EXPECT_EQ(cli::cmd_sdp_export(options(write_config(no_t, "no_t.json")), out, err), cli::kInputError);
}

TEST_F(CliTest, BinaryExitCodes) {
    const std::string exe = VARQQA_CLI_PATH;
    const auto run = [](const std::string& cmd) {
        const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
        return WEXITSTATUS(status);
    };
    EXPECT_EQ(run(exe + " --help"), 0);
    EXPECT_EQ(run(exe + " frobnicate"), 2);
    EXPECT_EQ(run(exe + " verify " + (dir / "absent.json").string()), 2);
    const auto cfg = write_config(mod22_solve());
    EXPECT_EQ(run(exe + " solve --quiet --config " + cfg + " --out " + (dir / "bin").string()), 0);
    EXPECT_EQ(run(exe + " verify " + (dir / "bin" / "record.json").string()), 0);
    EXPECT_EQ(run(exe + " solve --config " + cfg + " --threads 0"), 2);
}
