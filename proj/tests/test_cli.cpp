/**
 * Copyright 2026 The hetmap Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <gtest/gtest.h>
#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace hetmap {
namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("hetmap_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) {
    std::string cmd = std::string(HETMAP_CLI_PATH) + " " + args + " >" + (dir_ / "stdout").string() + " 2>" +
                      (dir_ / "stderr").string();
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  }

  std::string read(const std::string& name) const {
    std::ifstream in(dir_ / name);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  std::string p(const std::string& name) const { return (dir_ / name).string(); }

  std::string instance() const {
    return "--graph " + p("graph.json") + " --hardware " + p("hardware.json") + " --latency " + p("latency.json");
  }

  void gen_small() {
    ASSERT_EQ(run("gen --model er --p 0.5 --n 3 --modules 2 --seed 3 --out-dir " + dir_.string()), 0) << read("stderr");
  }

  fs::path dir_;
};

TEST_F(Cli, GenWritesInstance) {
  gen_small();
  for (const char* f : {"graph.json", "hardware.json", "latency.json", "modules.json"}) EXPECT_TRUE(fs::exists(p(f)));
  auto modules = nlohmann::json::parse(read("modules.json"));
  EXPECT_EQ(modules["modules"].size(), 2u);
}

TEST_F(Cli, ScheduleThenValidate) {
  gen_small();
  for (const char* algo : {"best_device", "met", "greedy", "heft", "sa", "ea", "milp", "split", "bheft"}) {
    ASSERT_EQ(run(std::string("schedule --algo ") + algo + " " + instance() + " -o " + p("s.json")), 0)
        << algo << ": " << read("stderr");
    EXPECT_EQ(run("validate " + instance() + " --schedule " + p("s.json")), 0) << algo;
    EXPECT_NE(read("stdout").find("valid"), std::string::npos);
  }
}

TEST_F(Cli, OracleAgreesWithMilp) {
  ASSERT_EQ(run("gen --model er --p 0.5 --n 2 --modules 2 --seed 5 --out-dir " + dir_.string()), 0);
  ASSERT_EQ(run("oracle " + instance() + " -o " + p("o.json")), 0) << read("stderr");
  ASSERT_EQ(run("schedule --algo milp " + instance() + " -o " + p("m.json")), 0) << read("stderr");
  double a = nlohmann::json::parse(read("o.json"))["objective_ms"].get<double>();
  double b = nlohmann::json::parse(read("m.json"))["objective_ms"].get<double>();
  EXPECT_NEAR(a, b, 1e-6);
  EXPECT_EQ(run("validate " + instance() + " --schedule " + p("o.json")), 0);
}

TEST_F(Cli, ValidateRejectsTamperedSchedule) {
  gen_small();
  ASSERT_EQ(run("schedule --algo heft " + instance() + " -o " + p("s.json")), 0);
  auto doc = nlohmann::json::parse(read("s.json"));
  doc["objective_ms"] = doc["objective_ms"].get<double>() + 1.0;
  std::ofstream(p("bad.json")) << doc.dump();
  EXPECT_EQ(run("validate " + instance() + " --schedule " + p("bad.json")), 1);
  EXPECT_NE(read("stderr").find("error["), std::string::npos);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("no-such-command"), 2);
  EXPECT_EQ(run("schedule --algo heft --graph " + p("missing.json") + " --hardware x --latency y"), 2);
  std::ofstream(p("broken.json")) << "{ nope";
  gen_small();
  EXPECT_EQ(run("schedule --algo heft --graph " + p("broken.json") + " --hardware " + p("hardware.json") +
                " --latency " + p("latency.json")),
            2);
  EXPECT_NE(read("stderr").find("parse"), std::string::npos);
  EXPECT_EQ(run("schedule --algo nonsense " + instance()), 2);
}

TEST_F(Cli, LowerBoundAndExport) {
  gen_small();
  ASSERT_EQ(run("lowerbound " + instance() + " -o " + p("lb.json")), 0) << read("stderr");
  auto lb = nlohmann::json::parse(read("lb.json"));
  ASSERT_EQ(run("schedule --algo milp " + instance() + " -o " + p("m.json")), 0);
  double opt = nlohmann::json::parse(read("m.json"))["objective_ms"].get<double>();
  EXPECT_LE(lb["latency_lb_ms"].get<double>(), opt + 1e-6);
  ASSERT_EQ(run("export-lp " + instance() + " -o " + p("model.lp")), 0);
  std::string lp = read("model.lp");
  EXPECT_EQ(lp.rfind("\\ hetmap model", 0), 0u);
  EXPECT_NE(lp.find("Binaries"), std::string::npos);
}

TEST_F(Cli, BenchCsv) {
  ASSERT_EQ(run("bench --model er --p 0.3 --n 4 --modules 2 --instances 2 --algos met,heft,split -o " + p("b.csv")),
            0)
      << read("stderr");
  std::string csv = read("b.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "instance,algo,objective,ms,wall_s,lbound,gap");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
}

TEST_F(Cli, GanttSvg) {
  gen_small();
  ASSERT_EQ(run("schedule --algo greedy " + instance() + " -o " + p("s.json")), 0);
  ASSERT_EQ(run("gantt " + instance() + " --schedule " + p("s.json") + " -o " + p("g.svg")), 0);
  std::string svg = read("g.svg");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("a100"), std::string::npos);
  ASSERT_EQ(run("gantt " + instance() + " --schedule " + p("s.json") + " -o " + p("g2.svg")), 0);
  EXPECT_EQ(read("g2.svg"), svg);
}

TEST_F(Cli, TransformerWithSymmetry) {
  ASSERT_EQ(run("gen --family transformer --layers 2 --nodes 1 --devices-per-node 2 --out-dir " + dir_.string()), 0);
  auto groups = nlohmann::json::parse(read("groups.json"));
  ASSERT_EQ(groups.size(), 1u);
  ASSERT_EQ(run("schedule --algo milp --symmetry task --groups " + p("groups.json") + " " + instance() + " -o " +
                p("s.json")),
            0)
      << read("stderr");
  ASSERT_EQ(run("schedule --algo milp " + instance() + " -o " + p("plain.json")), 0);
  EXPECT_NEAR(nlohmann::json::parse(read("s.json"))["objective_ms"].get<double>(),
              nlohmann::json::parse(read("plain.json"))["objective_ms"].get<double>(), 1e-6);
}

TEST_F(Cli, ThroughputReport) {
  ASSERT_EQ(run("gen --model er --p 0.5 --n 2 --modules 1 --batch-sizes 1,2 --out-dir " + dir_.string()), 0);
  ASSERT_EQ(run("schedule --algo milp --objective throughput -L 2 " + instance() + " -o " + p("s.json")), 0)
      << read("stderr");
  EXPECT_NE(read("stderr").find("inputs/s"), std::string::npos);
  EXPECT_EQ(run("validate -L 2 " + instance() + " --schedule " + p("s.json")), 0);
}

}  // namespace
}  // namespace hetmap
