#include <gtest/gtest.h>

#include <sys/wait.h>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "roughvol/cli/commands.hpp"
#include "roughvol/cli/config.hpp"

using namespace roughvol;
using namespace roughvol::cli;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = fs::temp_directory_path() / ("roughvol_cli_" + std::to_string(rd()));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

int run_binary(const std::string& args) {
    const std::string cmd = std::string(ROUGHVOL_BIN) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(FormatNumber, ShortestRoundTrip) {
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(format_number(2.0), "2");
    EXPECT_EQ(format_number(-0.75), "-0.75");
    std::mt19937_64 eng(1);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    for (int i = 0; i < 1000; ++i) {
        const double x = std::exp(u(eng)) * (i % 2 ? 1.0 : -1.0);
        const std::string s = format_number(x);
        double back = 0.0;
        std::from_chars(s.data(), s.data() + s.size(), back);
        EXPECT_EQ(back, x) << s;
    }
}

TEST(Config, ParsesKeyValueText) {
    const KeyValues kv = parse_config_text("# model\nalpha = 0.7\n  kappa2=-1   # mean reversion\n\nn = 16, 32\n");
    EXPECT_EQ(kv.at("alpha"), "0.7");
    EXPECT_EQ(kv.at("kappa2"), "-1");
    EXPECT_EQ(kv.at("n"), "16, 32");
    EXPECT_EQ(kv.size(), 3u);
}

TEST(Config, RejectsBadText) {
    EXPECT_THROW(parse_config_text("alpha = 0.7\nalpha = 0.8\n"), ConfigError);
    EXPECT_THROW(parse_config_text("alpha 0.7\n"), ConfigError);
    EXPECT_THROW(parse_config_text("gamma = 1\n"), ConfigError);
    EXPECT_THROW(parse_config_text("alpha =\n"), ConfigError);
    EXPECT_THROW(read_config_file("/nonexistent/roughvol.cfg"), ConfigError);
}

TEST(Config, ResolvesDefaultsAndValidates) {
    const RunConfig c = resolve_config("weak-rate", {{"alpha", "0.8"}, {"n", "8,16,32,64"}, {"kappa2", "-1.5"}});
    EXPECT_DOUBLE_EQ(c.model.alpha, 0.8);
    EXPECT_DOUBLE_EQ(c.model.kappa2, -1.5);
    EXPECT_EQ(c.n_list, (std::vector<int>{8, 16, 32, 64}));
    EXPECT_EQ(c.paths, 10000u);
    EXPECT_EQ(c.quantity, "mean_X");
    EXPECT_EQ(c.resolved.at("horizon"), "1");
    EXPECT_THROW(resolve_config("weak-rate", {}), ConfigError);
    EXPECT_THROW(resolve_config("weak-rate", {{"alpha", "0.4"}}), ConfigError);
    EXPECT_THROW(resolve_config("weak-rate", {{"alpha", "0.7"}, {"n", "32,16"}}), ConfigError);
    EXPECT_THROW(resolve_config("weak-rate", {{"alpha", "0.7"}, {"rho", "abc"}}), ConfigError);
    EXPECT_THROW(resolve_config("weak-rate", {{"alpha", "0.7"}, {"b", "cubic:1"}}), ConfigError);
    EXPECT_THROW(resolve_config("nonsense", {{"alpha", "0.7"}}), ConfigError);
    for (const auto& s : subcommands()) EXPECT_NO_THROW(resolve_config(s, {{"alpha", "0.75"}, {"kappa2", "-1"}})) << s;
}

TEST(Commands, InProcessTables) {
    const Artifacts a = run_command(resolve_config("exact-law", {{"alpha", "0.7"}, {"n", "4"}, {"kappa1", "0.5"}}));
    EXPECT_EQ(a.table.header, (std::vector<std::string>{"k", "t", "mean", "var"}));
    EXPECT_EQ(a.table.rows.size(), 5u);
    EXPECT_EQ(a.table.to_csv().substr(0, 13), "k,t,mean,var\n");
    EXPECT_EQ(a.summary["command"], "exact-law");
}

TEST(Binary, MissingAlphaWritesNothing) {
    TempDir d;
    EXPECT_EQ(run_binary("weak-rate --kappa2 -1 --out " + (d.path() / "o").string()), 1);
    EXPECT_FALSE(fs::exists(d.path() / "o"));
}

TEST(Binary, UnknownConfigKey) {
    TempDir d;
    std::ofstream(d.path() / "bad.cfg") << "alpha = 0.7\nfoo = 1\n";
    EXPECT_EQ(run_binary("exact-law --config " + (d.path() / "bad.cfg").string() + " --out " + d.path().string()), 1);
    EXPECT_FALSE(fs::exists(d.path() / "exact-law.csv"));
    EXPECT_EQ(run_binary("exact-law --alpha 0.7 --bogus 1 --out " + d.path().string()), 1);
    EXPECT_EQ(run_binary(""), 1);
}

TEST(Binary, WeakRateOutputs) {
    TempDir d;
    ASSERT_EQ(run_binary("weak-rate --alpha 0.8 --kappa1 0.5 --kappa2 -1 --n 32,64,128,256 --out " + d.path().string()), 0);
    const std::string csv = slurp(d.path() / "weak-rate.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "n,error,v_n,ratio");
    const auto j = nlohmann::json::parse(slurp(d.path() / "weak-rate.json"));
    EXPECT_TRUE(j["results"]["fit"]["pass"].get<bool>());
    EXPECT_EQ(j["config"]["n"].size(), 4u);
}

TEST(Binary, StationaryKeys) {
    TempDir d;
    ASSERT_EQ(run_binary("stationary --alpha 0.7 --kappa2 -1 --kappa1 0.5 --out " + d.path().string()), 0);
    const auto j = nlohmann::json::parse(slurp(d.path() / "stationary.json"));
    for (const char* k : {"sigma_inf_sq", "cov_at_t40", "rel_gap", "mean_limit", "mean_at_t40"})
        EXPECT_TRUE(j["results"].contains(k)) << k;
    EXPECT_LT(j["results"]["rel_gap"].get<double>(), 1e-4);
    EXPECT_DOUBLE_EQ(j["results"]["mean_limit"].get<double>(), 0.5);
}

TEST(Binary, OutputIndependentOfThreadCount) {
    TempDir d;
    const std::string args = "sample --alpha 0.65 --kappa2 -1 --rho 0.5 --n 16 --paths 5000 --seed 7 --b poly:0.1,-0.2 ";
    ASSERT_EQ(run_binary(args + "--threads 1 --out " + (d.path() / "a").string()), 0);
    ASSERT_EQ(run_binary(args + "--threads 3 --out " + (d.path() / "b").string()), 0);
    EXPECT_EQ(slurp(d.path() / "a" / "sample.csv"), slurp(d.path() / "b" / "sample.csv"));
    const auto ja = nlohmann::json::parse(slurp(d.path() / "a" / "sample.json"));
    const auto jb = nlohmann::json::parse(slurp(d.path() / "b" / "sample.json"));
    EXPECT_EQ(ja["results"].dump(), jb["results"].dump());
}

TEST(Binary, FlagsOverrideConfig) {
    TempDir d;
    std::ofstream(d.path() / "run.cfg") << "alpha = 0.7\nkappa2 = -1\nn = 4\n";
    ASSERT_EQ(run_binary("exact-law --config " + (d.path() / "run.cfg").string() + " --n 6 --out " + d.path().string()), 0);
    const auto j = nlohmann::json::parse(slurp(d.path() / "exact-law.json"));
    EXPECT_EQ(j["config"]["n"][0].get<int>(), 6);
    EXPECT_DOUBLE_EQ(j["config"]["model"]["kappa2"].get<double>(), -1.0);
}

TEST(Binary, NumericalFailureExitsTwo) {
    TempDir d;
    EXPECT_EQ(run_binary("sample --alpha 0.7 --n 8 --paths 100 --x0 1 --f expaff:1,800 --out " + d.path().string()), 2);
    EXPECT_FALSE(fs::exists(d.path() / "sample.csv"));
}
