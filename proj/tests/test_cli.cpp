// Copyright 2026 The eaudit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "eaudit/cli.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gtest/gtest.h"

using namespace eaudit;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// Second CSV line, split on commas.
std::vector<std::string> first_row(const std::string& csv) {
  std::istringstream in(csv);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  std::vector<std::string> cells;
  std::stringstream ss(row);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("eaudit_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string make(const std::string& kind, std::vector<std::string> params, const std::string& name) {
    std::vector<std::string> args{"zoo", kind};
    args.insert(args.end(), params.begin(), params.end());
    args.push_back("-o");
    args.push_back(path(name));
    auto r = invoke(args);
    EXPECT_EQ(r.code, 0) << r.err;
    return path(name);
  }

  fs::path dir_;
};

TEST_F(Cli, UsageAndUnknownCommands) {
  auto none = invoke({});
  EXPECT_EQ(none.code, cli::kExitUsage);
  EXPECT_NE(none.err.find("usage: eaudit"), std::string::npos);
  auto unknown = invoke({"distill"});
  EXPECT_EQ(unknown.code, cli::kExitUsage);
  EXPECT_NE(unknown.err.find("unknown command 'distill'"), std::string::npos);
  auto help = invoke({"--help"});
  EXPECT_EQ(help.code, cli::kExitOk);
  EXPECT_NE(help.out.find("commands:"), std::string::npos);
}

TEST_F(Cli, MeasureErOnMaximallyEntangledState) {
  auto phi = make("maxent", {"1"}, "phi.json");
  auto r = invoke({"measure", "er", phi});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "quantity,value,bound_kind,gap");
  auto row = first_row(r.out);
  ASSERT_EQ(row.size(), 4u);
  EXPECT_EQ(row[0], "er");
  EXPECT_NEAR(std::stod(row[1]), 1.0, 1e-5);
  EXPECT_EQ(row[2], "exact-smalldim");
  EXPECT_LE(std::stod(row[3]), 1e-6);
}

TEST_F(Cli, WernerRobustnessThroughZoo) {
  auto w = make("werner", {"0.8"}, "w.json");
  auto rg = invoke({"measure", "rg", w});
  ASSERT_EQ(rg.code, 0) << rg.err;
  EXPECT_NEAR(std::stod(first_row(rg.out)[1]), 0.7, 1e-6);
  auto lrg = invoke({"measure", "lrg", w, "--format", "json"});
  ASSERT_EQ(lrg.code, 0) << lrg.err;
  auto j = Json::parse(lrg.out);
  EXPECT_NEAR(j["value"].get<double>(), std::log2(1.7), 1e-6);
  EXPECT_EQ(j["command"], "measure");
}

TEST_F(Cli, EntropyAndRelativeEntropy) {
  auto phi = make("maxent", {"1"}, "phi.json");
  auto iso = make("isotropic", {"0.25"}, "iso.json");
  auto s = invoke({"measure", "entropy", iso});
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_NEAR(std::stod(first_row(s.out)[1]), 2.0, 1e-12);
  auto rel = invoke({"measure", "relent", phi, iso});
  ASSERT_EQ(rel.code, 0) << rel.err;
  EXPECT_NEAR(std::stod(first_row(rel.out)[1]), 2.0, 1e-10);
  auto inf = invoke({"measure", "relent", iso, phi, "--format", "json"});
  ASSERT_EQ(inf.code, 0) << inf.err;
  EXPECT_TRUE(Json::parse(inf.out)["infinite"].get<bool>());
  EXPECT_EQ(invoke({"measure", "relent", phi}).code, cli::kExitValidation);
}

TEST_F(Cli, InvalidStateIsAValidationError) {
  std::ofstream(path("bad.json")) << R"({"schema": 1, "dA": 2, "dB": 2,
    "re": [[1.5, 0, 0, 0], [0, -0.5, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]],
    "im": [[0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]]})";
  auto r = invoke({"measure", "er", path("bad.json")});
  EXPECT_EQ(r.code, cli::kExitValidation);
  EXPECT_NE(r.err.find("eigenvalue"), std::string::npos) << r.err;
  EXPECT_EQ(invoke({"measure", "er", path("missing.json")}).code, cli::kExitValidation);
  std::ofstream(path("garbage.json")) << "{ nope";
  EXPECT_EQ(invoke({"measure", "er", path("garbage.json")}).code, cli::kExitValidation);
}

TEST_F(Cli, ParseErrorsAreValidationErrors) {
  auto phi = make("maxent", {"1"}, "phi.json");
  EXPECT_EQ(invoke({"measure", "er", phi, "--format", "xml"}).code, cli::kExitValidation);
  EXPECT_EQ(invoke({"measure", "purity", phi}).code, cli::kExitValidation);
  EXPECT_EQ(invoke({"stein", "--y", "0.1", "--n", "2"}).code, cli::kExitValidation);
  EXPECT_EQ(invoke({"stein", "--dp", "--p", "0.9,x", "--q", "0.5,0.5", "--y", "0", "--n", "1"}).code,
            cli::kExitValidation);
  EXPECT_EQ(invoke({"zoo", "werner", "0.8"}).code, cli::kExitValidation);
  EXPECT_EQ(invoke({"zoo", "werner", "1.4", "-o", path("x.json")}).code, cli::kExitValidation);
}

TEST_F(Cli, FailureMapping) {
  std::ostringstream err;
  auto code = [&](auto e) { return cli::report_failure(std::make_exception_ptr(e), err); };
  EXPECT_EQ(code(NumericalError("solver stalled", 1e-3)), cli::kExitNumerical);
  EXPECT_EQ(code(Error(ErrorKind::positivity, "negative")), cli::kExitValidation);
  EXPECT_EQ(code(Error(ErrorKind::size, "too big")), cli::kExitValidation);
  EXPECT_EQ(code(std::runtime_error("boom")), cli::kExitNumerical);
  EXPECT_NE(err.str().find("solver stalled"), std::string::npos);
}

TEST_F(Cli, SteinEngines) {
  auto r = invoke({"stein", "--dp", "--p", "0.9,0.1", "--q", "0.5,0.5", "--y", "0.4,0.65", "--n", "200"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out,
            "n,y,value,engine\n"
            "200,4.000000000000e-01," + csv_double(stein_quantity_commuting(std::vector<double>{0.9, 0.1},
                                                                            std::vector<double>{0.5, 0.5}, 200, 0.4)) +
                ",dp\n"
            "200,6.500000000000e-01," + csv_double(stein_quantity_commuting(std::vector<double>{0.9, 0.1},
                                                                            std::vector<double>{0.5, 0.5}, 200, 0.65)) +
                ",dp\n");
  auto phi = make("maxent", {"1"}, "phi.json");
  auto mixed = make("werner", {"0"}, "mixed.json");
  auto d = invoke({"stein", "--dense", "--rho", phi, "--sigma", mixed, "--y", "0,3", "--n", "1"});
  ASSERT_EQ(d.code, 0) << d.err;
  EXPECT_EQ(d.out, "n,y,value,engine\n1,0.000000000000e+00,7.500000000000e-01,dense\n"
                   "1,3.000000000000e+00,0.000000000000e+00,dense\n");
  EXPECT_EQ(invoke({"stein", "--dense", "--rho", phi, "--sigma", mixed, "--y", "0", "--n", "9"}).code,
            cli::kExitValidation);
}

TEST_F(Cli, RegularizeAndFsep) {
  auto phi = make("maxent", {"1"}, "phi.json");
  auto reg = invoke({"regularize", phi, "--copies", "2", "--set", "ppt"});
  ASSERT_EQ(reg.code, 0) << reg.err;
  EXPECT_EQ(reg.out.substr(0, reg.out.find('\n')), "n,per_copy,bound_kind,gap");
  EXPECT_NEAR(std::stod(first_row(reg.out)[1]), 1.0, 1e-5);

  auto f = invoke({"fsep-dual", phi, "--n", "1", "--D", "0.5,1,1.5"});
  ASSERT_EQ(f.code, 0) << f.err;
  std::istringstream in(f.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "D,n,value");
  std::vector<double> values;
  while (std::getline(in, line)) values.push_back(std::stod(line.substr(line.rfind(',') + 1)));
  ASSERT_EQ(values.size(), 3u);
  EXPECT_NEAR(values[1], 1.0, 1e-3);
  EXPECT_LE(values[2], values[1] + 1e-9);
}

TEST_F(Cli, AuditChoiFile) {
  auto phi = make_max_entangled(1);
  auto fm = build_formation_map(phi, 1, validate_state(bell::projector(1), {2, 2}));
  save_channel(fm.channel, path("psi.json"));
  auto s = invoke({"audit", path("psi.json"), "--mode", "structural"});
  ASSERT_EQ(s.code, 0) << s.err;
  auto row = first_row(s.out);
  EXPECT_EQ(row[0], "structural");
  EXPECT_NEAR(std::stod(row[1]), 1.0, 1e-6);
  save_channel(QuantumChannel::identity({2, 2}), path("id.json"));
  EXPECT_EQ(invoke({"audit", path("id.json"), "--mode", "structural"}).code, cli::kExitValidation);
  auto sampled = invoke({"audit", path("id.json"), "--mode", "sampled", "--samples", "5"});
  ASSERT_EQ(sampled.code, 0) << sampled.err;
  EXPECT_NEAR(std::stod(first_row(sampled.out)[1]), 0.0, 1e-7);
}

TEST_F(Cli, EveryCommandEmitsOneJsonDocument) {
  auto phi = make("maxent", {"1"}, "phi.json");
  save_channel(QuantumChannel::constant(make_werner(0.9), {2, 2}), path("c.json"));
  std::vector<std::vector<std::string>> commands = {
      {"measure", "er", phi},
      {"measure", "rg", phi},
      {"measure", "entropy", phi},
      {"zoo", "belldiag", "0.1", "0.2", "0.3", "0.4", "-o", path("bd.json")},
      {"regularize", phi, "--copies", "1"},
      {"stein", "--dp", "--p", "0.9,0.1", "--q", "0.5,0.5", "--y", "0.4", "--n", "20"},
      {"fsep-dual", phi, "--n", "1", "--D", "1"},
      {"audit", path("c.json")},
  };
  for (auto args : commands) {
    args.push_back("--format");
    args.push_back("json");
    auto r = invoke(args);
    ASSERT_EQ(r.code, 0) << args[0] << ": " << r.err;
    Json j;
    ASSERT_NO_THROW(j = Json::parse(r.out)) << r.out;
    EXPECT_TRUE(j.is_object()) << args[0];
  }
}

TEST_F(Cli, ReportCanBeWrittenToFile) {
  auto phi = make("maxent", {"1"}, "phi.json");
  auto r = invoke({"measure", "rg", phi, "-o", path("rg.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(slurp(path("rg.csv")).substr(0, 8), "quantity");
}

TEST_F(Cli, BracketWithSweepOutput) {
  auto sep = make("werner", {"0.2"}, "sep.json");
  auto r = invoke({"bracket", sep, "--copies", "1", "--sweep-out", path("sweep.csv"), "--jobs", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "quantity,copies,value");
  auto sweep = slurp(path("sweep.csv"));
  EXPECT_EQ(sweep.substr(0, 10), "D,n,value\n");
  EXPECT_EQ(std::count(sweep.begin(), sweep.end(), '\n'), 42);
}

TEST_F(Cli, IdenticalConfigGivesIdenticalBytes) {
  auto w = make("werner", {"0.8"}, "w.json");
  auto c = path("c.json");
  save_channel(build_formation_map(make_werner(0.8), 1).channel, c);
  std::vector<std::vector<std::string>> commands = {
      {"measure", "er", w, "--set", "hull", "--seed", "5"},
      {"audit", c, "--mode", "sampled", "--samples", "10", "--seed", "3"},
      {"fsep-dual", w, "--n", "1", "--D", "0.2,0.4", "--set", "hull", "--seed", "9", "--jobs", "2"},
  };
  for (const auto& args : commands) {
    auto a = invoke(args);
    auto b = invoke(args);
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out) << args[0];
  }
}

}  // namespace
