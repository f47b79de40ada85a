#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "hellinger/cli.hpp"

using namespace hellinger;
namespace fs = std::filesystem;

namespace {

const std::string kSamples = HELLINGER_SAMPLE_DATA;

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "hellinger-kit");
  std::ostringstream out, err;
  Run r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string without_timestamp(const std::string& report) {
  std::istringstream in(report);
  std::string line, out;
  while (std::getline(in, line)) {
    if (line.find("\"timestamp\":") == std::string::npos) out += line + "\n";
  }
  return out;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("hellinger_cli_test_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Cli, RecurWritesBundle) {
  const auto dir = scratch("recur");
  const auto r = run_cli({"recur", "--family", kSamples + "/counterexample.json", "--z", "0", "--J", "100", "--out",
                          dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "report.json"));
  EXPECT_TRUE(fs::exists(dir / "run_meta.json"));
  std::ifstream csv(dir / "series_fundamental.csv");
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line.rfind("j,norm_P,norm_Q,norm_P_plus,norm_Q_plus", 0), 0u);
  int expected = -1;
  std::vector<std::string> rows;
  while (std::getline(csv, line)) {
    EXPECT_EQ(std::stoi(line.substr(0, line.find(','))), expected++);
    rows.push_back(line);
  }
  EXPECT_EQ(expected, 101);
  // P_3 = -(2/3) E and Q_4 = (3/8) E.
  EXPECT_EQ(rows[4].substr(0, rows[4].find(',', 2)), "3,0.6666666666666666");
  const auto report = json::parse(slurp(dir / "report.json"));
  EXPECT_EQ(report["schema"], 1);
  EXPECT_EQ(report["command"], "recur");
  EXPECT_EQ(report["result"]["reached"], 100);
}

TEST(Cli, ReportsAreDeterministicApartFromTimestamp) {
  const std::vector<std::vector<std::string>> runs{
      {"hellinger", "--family", kSamples + "/geometric.json", "--z0", "0", "--p", "2", "--J", "400"},
      {"identities", "--family", kSamples + "/random2.json", "--z", "1+0.5i", "--J", "50"},
      {"lp-scan", "--family", kSamples + "/counterexample.json", "--p", "2.1", "--J", "400", "--threads", "3"},
  };
  for (auto args : runs) {
    const auto dir = scratch("det");
    args.insert(args.end(), {"--out", dir.string()});
    ASSERT_EQ(run_cli(args).code, 0) << args[0];
    const auto first = slurp(dir / "report.json");
    std::map<fs::path, std::string> series;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() == ".csv") series[entry.path()] = slurp(entry.path());
    }
    ASSERT_FALSE(series.empty());
    ASSERT_EQ(run_cli(args).code, 0) << args[0];
    EXPECT_NE(first.find("\"timestamp\""), std::string::npos);
    EXPECT_EQ(without_timestamp(first), without_timestamp(slurp(dir / "report.json"))) << args[0];
    for (const auto& [path, text] : series) EXPECT_EQ(text, slurp(path)) << path;
  }
}

TEST(Cli, FamilyEchoRoundTrips) {
  for (const char* name : {"counterexample.json", "geometric.json", "diag_geometric.json", "random2.json",
                           "free_jacobi.json", "explicit_scalar.json"}) {
    const auto r = run_cli({"recur", "--family", kSamples + "/" + name, "--J", "4"});
    ASSERT_EQ(r.code, 0) << name << r.err;
    const auto report = json::parse(r.out);
    const auto original = build_family(cli::read_json_file(kSamples + "/" + name));
    const auto echoed = build_family(report["family"]);
    EXPECT_EQ(echoed.spec(), original.spec()) << name;
    EXPECT_EQ(echoed.upper(-1), original.upper(-1));
    EXPECT_EQ(echoed.lower(-1), original.lower(-1));
    for (int j = 0; j < 4; ++j) {
      EXPECT_EQ(echoed.diag(j), original.diag(j));
      EXPECT_EQ(echoed.upper(j), original.upper(j));
      EXPECT_EQ(echoed.lower(j), original.lower(j));
    }
  }
}

TEST(Cli, ReportJsonRoundTripsLosslessly) {
  const auto r = run_cli({"lp-scan", "--family", kSamples + "/free_jacobi.json", "--z", "3", "--p", "inf", "--J", "200"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = json::parse(r.out);
  EXPECT_EQ(report.dump(2) + "\n", r.out);
  EXPECT_EQ(report["config"]["p"], "inf");
}

TEST(Cli, ConfigFileWithFlagOverride) {
  const auto r = run_cli({"hellinger", "--config", kSamples + "/hellinger_geometric.json", "--J", "300"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = json::parse(r.out);
  EXPECT_EQ(report["config"]["J"], 300);
  EXPECT_EQ(report["config"]["family"], "geometric.json");
  EXPECT_EQ(report["result"]["options"]["J"], 300);
  EXPECT_EQ(report["verdict"], "pass");
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run_cli({"hellinger", "--family", kSamples + "/counterexample.json", "--p", "2", "--J", "400", "--grid",
                     "[\"i\"]"})
                .code,
            1);
  EXPECT_EQ(run_cli({"perturb", "--family", kSamples + "/geometric.json", "--p", "1", "--F", "{\"kind\":\"linear\"}"})
                .code,
            1);
  EXPECT_EQ(run_cli({"perturb", "--family", kSamples + "/geometric.json", "--p", "1", "--F", "{\"kind\":\"sin\"}"})
                .code,
            0);

  for (const auto& args : std::vector<std::vector<std::string>>{
           {},
           {"recur"},
           {"recur", "--family", kSamples + "/geometric.json", "--J", "ten"},
           {"recur", "--family", kSamples + "/geometric.json", "--z", "1+"},
           {"hellinger", "--family", kSamples + "/geometric.json", "--p", "0.5"},
           {"recur", "--family", "{\"kind\":\"builtin\",\"name\":\"nope\"}"},
           {"recur", "--family", kSamples + "/missing.json"},
           {"oracle", "--family", kSamples + "/geometric.json", "--z", "1/0"},
       }) {
    const auto r = run_cli(args);
    EXPECT_EQ(r.code, 2) << (args.empty() ? "" : args[0]) << " " << r.err;
    const auto e = json::parse(r.err);
    EXPECT_EQ(e["error"]["kind"], "config");
    EXPECT_EQ(e["exit_code"], 2);
  }

  const auto trunc = run_cli({"recur", "--family", kSamples + "/geometric.json", "--J", "1100"});
  EXPECT_EQ(trunc.code, 3);
  EXPECT_EQ(json::parse(trunc.err)["error"]["kind"], "numerical");
  EXPECT_EQ(json::parse(trunc.out)["result"]["reached"], 1023);
}

TEST(Cli, UnknownConfigKeysAreRejected) {
  const auto dir = scratch("badcfg");
  fs::create_directories(dir);
  std::ofstream(dir / "cfg.json") << R"({"family": {"kind": "builtin", "name": "geometric"}, "zz": 1})";
  const auto r = run_cli({"recur", "--config", (dir / "cfg.json").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("zz"), std::string::npos);
}

TEST(Cli, SolveMatchesFundamentalSystem) {
  const auto r = run_cli({"solve", "--family", kSamples + "/random2.json", "--z", "0.3-0.2i", "--J", "30", "--init",
                          R"({"u_m1": [0, 0], "u_0": [1, 0]})"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = json::parse(r.out);
  EXPECT_LE(json_to_double(report["result"]["superposition_defect"]), 1e-12);
  EXPECT_LE(json_to_double(report["result"]["max_residual"]), 1e-12);
}

TEST(Cli, ForcedSolveUsesVariationOfConstants) {
  const auto dir = scratch("forced");
  fs::create_directories(dir);
  json forcing = json::array();
  for (int j = 0; j < 25; ++j) forcing.push_back(json::array({std::sin(j), json::array({0.0, 1.0 / (j + 1)})}));
  std::ofstream(dir / "forcing.json") << forcing.dump();
  const auto r = run_cli({"solve", "--family", kSamples + "/random2.json", "--z", "0.5i", "--J", "25", "--forcing",
                          (dir / "forcing.json").string(), "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = json::parse(r.out);
  EXPECT_TRUE(report["result"]["inhomogeneous"].get<bool>());
  EXPECT_LE(json_to_double(report["result"]["max_residual"]), 1e-9);
  EXPECT_TRUE(fs::exists(dir / "series_solution.csv"));
}

TEST(Cli, OracleDumpIsExact) {
  const auto dir = scratch("oracle");
  const auto r = run_cli({"oracle", "--family", kSamples + "/counterexample.json", "--z", "0", "--J", "7", "--out",
                          dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = slurp(dir / "series_oracle.csv");
  EXPECT_NE(csv.find("5,P,0,0,8/15,0"), std::string::npos);
  EXPECT_NE(csv.find("6,Q,1,1,-5/16,0"), std::string::npos);
  EXPECT_NE(csv.find("3,P,0,1,0,0"), std::string::npos);
}

TEST(Cli, CounterexampleCommand) {
  const auto dir = scratch("counterexample");
  const auto r = run_cli({"counterexample", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = json::parse(r.out);
  EXPECT_EQ(report["verdict"], "pass");
  EXPECT_EQ(report["family"]["name"], "hellinger_counterexample");
  EXPECT_TRUE(fs::exists(dir / "series_counterexample_norms.csv"));
  EXPECT_TRUE(fs::exists(dir / "series_witnesses.csv"));
  EXPECT_EQ(run_cli({"counterexample", "--J-exponent", "100"}).code, 2);
}

TEST(Cli, HelpAndVersion) {
  EXPECT_EQ(run_cli({"--help"}).code, 0);
  const auto v = run_cli({"--version"});
  EXPECT_EQ(v.code, 0);
  EXPECT_NE(v.out.find(cli::kVersion), std::string::npos);
}
