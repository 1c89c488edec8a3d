/*
    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
*/

#include "reference.hpp"

#include <scandet/cli/commands.hpp>
#include <scandet/cli/config.hpp>
#include <scandet/cli/manifest.hpp>
#include <scandet/cli/synth.hpp>
#include <scandet/errors.hpp>

#include <gtest/gtest.h>
#include <json.hpp>

#include <cstdlib>
#include <sstream>

using namespace scandet;
using scandet::testing::slurp;
using scandet::testing::spit;
using scandet::testing::TempDir;

namespace {

const std::filesystem::path kFixtures = SCANDET_FIXTURE_DIR;
const std::filesystem::path kConfigDir = SCANDET_CONFIG_DIR;

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "scandet");
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::size_t count_lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

std::string without_first_line(const std::string& text) { return text.substr(text.find('\n') + 1); }

class EnvGuard {
  public:
    EnvGuard(const char* name, const std::string& value) : name_(name) { ::setenv(name, value.c_str(), 1); }
    ~EnvGuard() { ::unsetenv(name_); }

  private:
    const char* name_;
};

}// namespace

TEST(CliDetect, MatchesGoldenVerdicts) {
    TempDir dir;
    const auto r = run({"detect", (kFixtures / "golden_flows.csv").string(), "-o", (dir / "verdicts.csv").string(),
                        "--threshold", "100"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(slurp(dir / "verdicts.csv"), slurp(kFixtures / "golden_verdicts.csv"));
}

TEST(CliDetect, GoldenVerdictsAgreeWithNaiveReference) {
    const auto flows = read_flow_file(kFixtures / "golden_flows.csv");
    const auto expected = scandet::testing::naive_detect(flows, 1514808000000000, 30'000'000, 100);
    std::istringstream golden(without_first_line(without_first_line(slurp(kFixtures / "golden_verdicts.csv"))));
    std::string line;
    std::size_t i = 0;
    while (std::getline(golden, line)) {
        ASSERT_LT(i, expected.size());
        const auto& v = expected[i++];
        std::ostringstream want;
        want << v.slice << ',' << v.ip.to_string() << ',' << (v.sender ? "sender" : "receiver") << ',' << v.generated
             << ',' << v.received << ',' << v.ratio << ',';
        EXPECT_EQ(line.substr(0, want.str().size()), want.str());
    }
    EXPECT_EQ(i, expected.size());
}

TEST(CliDetect, StreamModeAndWorkersAgreeWithBatch) {
    TempDir dir;
    const auto in = (kFixtures / "golden_flows.csv").string();
    ASSERT_EQ(run({"detect", in, "-o", (dir / "a.csv").string()}).code, 0);
    ASSERT_EQ(run({"detect", in, "-o", (dir / "b.csv").string(), "--mode", "stream"}).code, 0);
    ASSERT_EQ(run({"detect", in, "-o", (dir / "c.csv").string(), "--workers", "4", "--partitioning", "ip"}).code, 0);
    const auto a = without_first_line(slurp(dir / "a.csv"));
    EXPECT_EQ(without_first_line(slurp(dir / "b.csv")), a);
    EXPECT_EQ(without_first_line(slurp(dir / "c.csv")), a);
}

TEST(CliDetect, IdempotentAndManifested) {
    TempDir dir;
    const auto in = kFixtures / "golden_flows.csv";
    ASSERT_EQ(run({"detect", in.string(), "-o", (dir / "v.csv").string()}).code, 0);
    const auto first = slurp(dir / "v.csv");
    ASSERT_EQ(run({"detect", in.string(), "-o", (dir / "v.csv").string()}).code, 0);
    EXPECT_EQ(slurp(dir / "v.csv"), first);

    EXPECT_EQ(first.substr(0, first.find('\n')), "# manifest: v.csv.manifest.json");
    const auto manifest = nlohmann::json::parse(slurp(dir / "v.csv.manifest.json"));
    EXPECT_EQ(manifest["command"], "detect");
    EXPECT_EQ(manifest["version"], cli::tool_version());
    EXPECT_EQ(manifest["inputs"][0]["sha256"], cli::sha256_file(in));
    EXPECT_EQ(manifest["config"]["detector"]["threshold"], 100.0);
    EXPECT_TRUE(manifest.contains("started_at"));
    EXPECT_TRUE(manifest.contains("finished_at"));
}

TEST(CliDetect, MissingInputExitsOneWithoutOutput) {
    TempDir dir;
    const auto r = run({"detect", (dir / "absent.csv").string(), "-o", (dir / "v.csv").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_FALSE(std::filesystem::exists(dir / "v.csv"));
    EXPECT_EQ(count_lines(r.err), 1U);
    EXPECT_EQ(r.err.rfind("scandet: error kind=io exit=1 ", 0), 0U) << r.err;
}

TEST(CliDetect, ZeroThresholdInConfigExitsTwoNamingField) {
    TempDir dir;
    spit(dir / "bad.ini", "[detector]\nthreshold = 0\n");
    const auto r = run({"detect", (kFixtures / "golden_flows.csv").string(), "-o", (dir / "v.csv").string(),
                        "--config", (dir / "bad.ini").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("field=detector.threshold"), std::string::npos) << r.err;
    EXPECT_EQ(count_lines(r.err), 1U);
    EXPECT_FALSE(std::filesystem::exists(dir / "v.csv"));
}

TEST(CliDetect, ConfigFromEnvironmentAndFlagPrecedence) {
    TempDir dir;
    spit(dir / "env.ini", "[detector]\nthreshold = 110\n");
    EnvGuard env(cli::kConfigEnv, (dir / "env.ini").string());
    const auto in = (kFixtures / "golden_flows.csv").string();

    ASSERT_EQ(run({"detect", in, "-o", (dir / "env.csv").string()}).code, 0);
    // only the 120-flow slice survives threshold 110
    EXPECT_EQ(count_lines(slurp(dir / "env.csv")), 3U);

    ASSERT_EQ(run({"detect", in, "-o", (dir / "flag.csv").string(), "--threshold", "100"}).code, 0);
    EXPECT_EQ(count_lines(slurp(dir / "flag.csv")), 6U);
}

TEST(CliDetect, ShippedConfigLoads) {
    const auto cfg = cli::load_config(kConfigDir / "scandet.ini");
    EXPECT_EQ(cfg.detector.threshold, 100.0);
    EXPECT_EQ(cfg.rules.known_ports.to_string(), "0-1023");
    EXPECT_TRUE(cfg.whitelist.matches("ntscSYN"));
    EXPECT_FALSE(cfg.whitelist.matches("ntscICMP"));
}

TEST(CliDetect, UnknownConfigKeyRejected) {
    TempDir dir;
    spit(dir / "typo.ini", "[detector]\nthreshhold = 5\n");
    const auto r = run({"detect", (kFixtures / "golden_flows.csv").string(), "-o", (dir / "v.csv").string(),
                        "--config", (dir / "typo.ini").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("detector.threshhold"), std::string::npos) << r.err;
}

TEST(CliUsage, HelpAndBadFlags) {
    EXPECT_EQ(run({"--help"}).code, 0);
    EXPECT_EQ(run({"detect", "--help"}).code, 0);
    const auto r = run({"detect", "--no-such-flag"});
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(r.err.rfind("scandet: error kind=usage exit=2 ", 0), 0U) << r.err;
    EXPECT_EQ(run({}).code, 2);
}

TEST(CliEvaluate, HandComputedMatrices) {
    TempDir dir;
    const auto r = run({"evaluate", "--flows", (kFixtures / "golden_flows.csv").string(), "--anomalous",
                        (kFixtures / "golden_anomalous.xml").string(), "--notice",
                        (kFixtures / "golden_notice.xml").string(), "--thresholds", "100", "--truth", "total", "-o",
                        (dir / "report.csv").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto report = slurp(dir / "report.csv");
    // universe 226 addresses; detected {A, P, V}
    EXPECT_NE(report.find("golden_flows,1,100,total,3,0,2,221,0.600000,1.000000,0\n"), std::string::npos) << report;
    EXPECT_NE(report.find("golden_flows,2,100,total,3,0,0,223,1.000000,1.000000,0\n"), std::string::npos) << report;
    EXPECT_NE(report.find("golden_flows,3,100,total,3,0,0,223,1.000000,1.000000,0\n"), std::string::npos) << report;
    EXPECT_TRUE(std::filesystem::exists(dir / "report.csv.manifest.json"));
}

TEST(CliEvaluate, ThreeThresholdsGiveThreeRowsPerTrace) {
    const auto r = run({"evaluate", "--flows", (kFixtures / "golden_flows.csv").string(), "--anomalous",
                        (kFixtures / "golden_anomalous.xml").string(), "--case", "1", "--thresholds", "50,100,200",
                        "--truth", "anomalous"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, kReportHeader);
    std::size_t rows = 0;
    while (std::getline(in, line) && !line.empty()) {
        ++rows;
    }
    EXPECT_EQ(rows, 3U);
}

TEST(CliEvaluate, MultiTraceAggregate) {
    const auto flows = (kFixtures / "golden_flows.csv").string();
    const auto gt = (kFixtures / "golden_anomalous.xml").string();
    const auto r = run({"evaluate", "--flows", flows, "--flows", flows, "--anomalous", gt, "--anomalous", gt,
                        "--trace-id", "t1", "--trace-id", "t2", "--case", "3", "--thresholds", "100", "--truth",
                        "anomalous"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("t1,3,100,anomalous,"), std::string::npos);
    EXPECT_NE(r.out.find("t2,3,100,anomalous,"), std::string::npos);
    EXPECT_NE(r.out.find("# aggregate case=3 metric=precision\nthreshold,anomalous,notice,total\n100,1.000+-0.000,n/a,n/a\n"),
              std::string::npos)
        << r.out;
}

TEST(CliEvaluate, ReintegratedColumnCountsRuleConfirmedHits) {
    TempDir dir;
    spit(dir / "none.xml", slurp(kFixtures / "empty.xml"));
    const auto r = run({"evaluate", "--flows", (kFixtures / "golden_flows.csv").string(), "--anomalous",
                        (dir / "none.xml").string(), "--case", "3", "--thresholds", "100", "--truth", "total"});
    ASSERT_EQ(r.code, 0) << r.err;
    // A (net scan) and P (port scan) are confirmed; V sends nothing
    EXPECT_NE(r.out.find("golden_flows,3,100,total,2,1,0,223,1.000000,0.666667,2\n"), std::string::npos) << r.out;
}

TEST(CliEvaluate, BrokenGroundTruthExitsThree) {
    const auto r = run({"evaluate", "--flows", (kFixtures / "golden_flows.csv").string(), "--anomalous",
                        (kFixtures / "truncated.xml").string()});
    EXPECT_EQ(r.code, 3);
    EXPECT_EQ(r.err.rfind("scandet: error kind=ground-truth exit=3 ", 0), 0U) << r.err;
}

TEST(CliEvaluate, StrictRejectsDamagedEntries) {
    const auto flows = (kFixtures / "golden_flows.csv").string();
    const auto damaged = (kFixtures / "damaged.xml").string();
    const auto lenient = run({"evaluate", "--flows", flows, "--anomalous", damaged});
    EXPECT_EQ(lenient.code, 0);
    EXPECT_NE(lenient.err.find("warning"), std::string::npos);
    EXPECT_EQ(run({"evaluate", "--flows", flows, "--anomalous", damaged, "--strict"}).code, 3);
}

TEST(CliBench, RowArithmetic) {
    const auto in = (kFixtures / "golden_flows.csv").string();
    const auto r = run({"bench", in, "--workers", "1,2,4", "--reps", "5"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto split = r.out.find("\n\n");
    ASSERT_NE(split, std::string::npos);
    EXPECT_EQ(count_lines(r.out.substr(0, split + 1)), 1U + 15U);
    EXPECT_EQ(count_lines(r.out.substr(split + 2)), 1U + 3U);

    const auto one = run({"bench", in, "--reps", "1"});
    ASSERT_EQ(one.code, 0);
    EXPECT_EQ(count_lines(one.out.substr(0, one.out.find("\n\n") + 1)), 2U);
}

TEST(CliBench, RejectsZeroReps) {
    EXPECT_EQ(run({"bench", (kFixtures / "golden_flows.csv").string(), "--reps", "0"}).code, 2);
}

TEST(FiveNumberSummary, LinearInterpolation) {
    EXPECT_EQ(cli::five_number_summary({5, 1, 3, 2, 4}), (std::vector<double>{1, 2, 3, 4, 5}));
    EXPECT_EQ(cli::five_number_summary({4, 3, 2, 1}), (std::vector<double>{1, 1.75, 2.5, 3.25, 4}));
    EXPECT_EQ(cli::five_number_summary({7}), (std::vector<double>{7, 7, 7, 7, 7}));
}

TEST(CliSynth, DeterministicForSeed) {
    TempDir dir;
    spit(dir / "spec.json", R"({"slices": 4, "background": {"hosts": 20}, "scanners": [{"kind": "netscan"}]})");
    ASSERT_EQ(run({"synth", (dir / "spec.json").string(), "-o", (dir / "a.csv").string(), "--seed", "9"}).code, 0);
    ASSERT_EQ(run({"synth", (dir / "spec.json").string(), "-o", (dir / "b.csv").string(), "--seed", "9"}).code, 0);
    ASSERT_EQ(run({"synth", (dir / "spec.json").string(), "-o", (dir / "c.csv").string(), "--seed", "10"}).code, 0);
    EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
    EXPECT_EQ(slurp(dir / "a.csv.anomalous.xml"), slurp(dir / "b.csv.anomalous.xml"));
    EXPECT_NE(slurp(dir / "a.csv"), slurp(dir / "c.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "a.csv.manifest.json"));
}

TEST(CliSynth, OneScannerIsTheWholeGroundTruth) {
    TempDir dir;
    spit(dir / "spec.json",
         R"({"background": {"hosts": 50}, "scanners": [{"kind": "netscan", "flows_per_slice": 120}]})");
    ASSERT_EQ(run({"synth", (dir / "spec.json").string(), "-o", (dir / "t.csv").string()}).code, 0);
    const auto gt = read_ground_truth(dir / "t.csv.anomalous.xml", dir / "t.csv.notice.xml");
    ASSERT_EQ(gt.size(), 1U);
    EXPECT_EQ(gt.ip_set(), std::set{IpAddress::from_string("198.18.0.1")});
    EXPECT_EQ(gt.entries[0].taxonomy_label, "ntscSYN");
}

TEST(CliSynth, NoScannersNoAnomalies) {
    TempDir dir;
    spit(dir / "spec.json", R"({"slices": 2, "background": {"hosts": 10}})");
    ASSERT_EQ(run({"synth", (dir / "spec.json").string(), "-o", (dir / "t.csv").string()}).code, 0);
    EXPECT_TRUE(read_ground_truth(dir / "t.csv.anomalous.xml", std::nullopt).empty());
    EXPECT_FALSE(read_flow_file(dir / "t.csv").empty());
}

TEST(CliSynth, InvalidSpecExitsTwo) {
    TempDir dir;
    spit(dir / "bad.json", R"({"scanners": [{"kind": "pingsweep"}]})");
    const auto r = run({"synth", (dir / "bad.json").string(), "-o", (dir / "t.csv").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("field=synth.scanners[0].kind"), std::string::npos) << r.err;
    spit(dir / "broken.json", "{ not json");
    EXPECT_EQ(run({"synth", (dir / "broken.json").string(), "-o", (dir / "t.csv").string()}).code, 2);
}

TEST(Sha256, KnownVector) {
    TempDir dir;
    spit(dir / "abc", "abc");
    EXPECT_EQ(cli::sha256_file(dir / "abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
