#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"

#include "commands.hpp"
#include "config.hpp"
#include "io.hpp"
#include "lanova/error.hpp"
#include "lanova/inference.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace lanova::cli {
namespace {

const fs::path kGolden{LANOVA_GOLDEN_DIR};

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

json invoke_json(std::vector<std::string> args) {
  args.push_back("--json");
  const Outcome o = invoke(args);
  EXPECT_EQ(o.code, kExitOk) << o.err;
  return json::parse(o.out);
}

class ScratchDir {
 public:
  ScratchDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("lanova_cli_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  fs::path file(const std::string& name, const std::string& body) const {
    const fs::path p = path_ / name;
    std::ofstream(p) << body;
    return p;
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

// Same keys in the same order with the same types; numbers to a relative 1e-12.
void expect_same_document(const json& actual, const json& expected, const std::string& where) {
  ASSERT_EQ(actual.type_name(), std::string(expected.type_name())) << where;
  if (expected.is_object()) {
    ASSERT_EQ(actual.size(), expected.size()) << where;
    auto a = actual.begin();
    for (auto e = expected.begin(); e != expected.end(); ++e, ++a) {
      ASSERT_EQ(a.key(), e.key()) << where;
      expect_same_document(*a, *e, where + "." + e.key());
    }
  } else if (expected.is_array()) {
    ASSERT_EQ(actual.size(), expected.size()) << where;
    for (std::size_t i = 0; i < expected.size(); ++i) {
      expect_same_document(actual[i], expected[i], where + "[" + std::to_string(i) + "]");
    }
  } else if (expected.is_number_float()) {
    const double e = expected.get<double>();
    EXPECT_NEAR(actual.get<double>(), e, 1e-12 * std::max(1.0, std::abs(e))) << where;
  } else {
    EXPECT_EQ(actual, expected) << where;
  }
}

struct GoldenCase {
  std::string golden;
  std::vector<std::string> args;
  std::string input;
};

void PrintTo(const GoldenCase& c, std::ostream* os) { *os << c.golden; }

class GoldenOutput : public ::testing::TestWithParam<GoldenCase> {};

TEST_P(GoldenOutput, MatchesPinnedDocument) {
  const GoldenCase& c = GetParam();
  std::vector<std::string> args = c.args;
  if (!c.input.empty()) {
    args.push_back("--input");
    args.push_back((kGolden / c.input).string());
  }
  json actual = invoke_json(args);
  json expected = read_json(kGolden / c.golden);
  if (!c.input.empty()) {
    EXPECT_EQ(actual["input"]["path"], (kGolden / c.input).string());
    actual["input"]["path"] = expected["input"]["path"];
  }
  expect_same_document(actual, expected, c.golden);
}

INSTANTIATE_TEST_SUITE_P(
    Cli, GoldenOutput,
    ::testing::Values(GoldenCase{"estimate_matrix.json", {"estimate"}, "matrix.csv"},
                      GoldenCase{"fit_matrix.json", {"fit"}, "matrix.csv"},
                      GoldenCase{"test_matrix.json", {"test"}, "matrix.csv"},
                      GoldenCase{"estimate_tensor_corrected.json", {"estimate", "--pi-c", "0.3"}, "small.tensor"},
                      GoldenCase{"fit_tensor.json", {"fit"}, "small.tensor"},
                      GoldenCase{"power_bernoulli_normal.json",
                                 {"power", "--dist", "bernoulli_normal", "--phi2", "1,2", "--p", "400,1000", "--pi-c",
                                  "0.1,0.5"},
                                 ""}),
    [](const auto& info) {
      std::string name = info.param.golden.substr(0, info.param.golden.find('.'));
      for (char& ch : name) {
        if (ch == '_') ch = 'X';
      }
      return name;
    });

TEST(Cli, ZeroMatrixFitsAdditively) {
  ScratchDir dir;
  const fs::path zeros = dir.file("zeros.csv", "0,0,0,0\n0,0,0,0\n0,0,0,0\n");
  const json doc = invoke_json({"fit", "--input", zeros.string()});
  EXPECT_EQ(doc["route"], "additive");
  EXPECT_EQ(doc["nuisance"]["clipped_c"], true);
  EXPECT_TRUE(doc["test"].is_null());
  const json& top = doc["blocks"].back();
  EXPECT_EQ(top["name"], "effect_1_2");
  EXPECT_EQ(top["nonzero"], 0);
  EXPECT_EQ(top["size"], 12);
}

TEST(Cli, NullPowerIsTheLevel) {
  const json doc = invoke_json({"power", "--dist", "laplace", "--phi2", "0", "--p", "1000", "--alpha", "0.05"});
  ASSERT_EQ(doc["rows"].size(), 1u);
  EXPECT_NEAR(doc["rows"][0]["power"].get<double>(), 0.05, 1e-15);
}

TEST(Cli, PowerTextIsCsv) {
  const Outcome o = invoke({"power", "--phi2", "0,1", "--p", "1000"});
  ASSERT_EQ(o.code, kExitOk);
  EXPECT_EQ(o.out.substr(0, o.out.find('\n')), "phi2,p,power");
  EXPECT_NE(o.out.find("1,1000,0.86985388"), std::string::npos) << o.out;
}

TEST(Cli, UsageErrorsExitTwo) {
  const fs::path m = kGolden / "matrix.csv";
  const std::vector<std::vector<std::string>> cases = {
      {},
      {"bogus"},
      {"estimate"},
      {"estimate", "--input", m.string(), "--kappa", "1", "--pi-c", "0.5"},
      {"test", "--input", m.string(), "--alpha", "2"},
      {"power", "--dist", "cauchy"},
      {"estimate", "--input", m.string(), "--format", "xml"},
      {"fit", "--input", (kGolden / "small.tensor").string(), "--penalize-main"},
      {"simulate", "--set", "study=nonsense"},
      {"simulate", "--set", "unknown_key=1"},
      {"compare", "--set", "study=level"},
  };
  for (const auto& args : cases) {
    const Outcome o = invoke(args);
    std::string joined;
    for (const auto& a : args) joined += a + " ";
    EXPECT_EQ(o.code, kExitUsage) << joined << "\n" << o.err;
    EXPECT_FALSE(o.err.empty()) << joined;
  }
}

TEST(Cli, HelpAndVersionExitZero) {
  EXPECT_EQ(invoke({"--help"}).code, kExitOk);
  const Outcome v = invoke({"--version"});
  EXPECT_EQ(v.code, kExitOk);
}

TEST(Cli, BadInputFilesExitOne) {
  ScratchDir dir;
  const std::vector<fs::path> bad = {
      dir.path() / "missing.tensor",
      dir.file("noheader.tensor", "1 2 3 4\n"),
      dir.file("short.tensor", "dims: 2 3\n1 2 3 4 5\n"),
      dir.file("nan.tensor", "dims: 2 2\n1 nan 3 4\n"),
      dir.file("inf.csv", "1,2\n3,inf\n"),
      dir.file("ragged.csv", "1,2,3\n4,5\n"),
      dir.file("text.csv", "a,b\nc,d\n"),
      dir.file("degenerate.tensor", "dims: 1 4\n1 2 3 4\n"),
  };
  for (const auto& p : bad) {
    const Outcome o = invoke({"estimate", "--input", p.string()});
    EXPECT_EQ(o.code, kExitModel) << p << "\n" << o.err;
    EXPECT_NE(o.err.find("error"), std::string::npos) << p;
  }
}

TEST(Cli, LogitRangeViolationExitsOne) {
  ScratchDir dir;
  const fs::path p = dir.file("pct.csv", "10,20\n30,100\n");
  EXPECT_EQ(invoke({"estimate", "--input", p.string(), "--logit", "--logit-scale", "100"}).code, kExitModel);
  const fs::path ok = dir.file("pct_ok.csv", "10,20,35\n30,90,50\n5,60,45\n");
  EXPECT_EQ(invoke({"estimate", "--input", ok.string(), "--logit", "--logit-scale", "100"}).code, kExitOk);
}

TEST(Io, TensorFileRoundTrip) {
  ScratchDir dir;
  std::mt19937_64 gen(17);
  std::normal_distribution<double> normal;
  DenseTensor t(Dims{3, 2, 4});
  for (double& v : t.values()) v = normal(gen) * 1e3;
  const fs::path p = dir.path() / "round.tensor";
  write_tensor_file(p, t);
  const DenseTensor back = read_tensor_file(p);
  ASSERT_EQ(back.dims(), t.dims());
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(back[i], t[i]);
}

TEST(Io, TensorFileAllowsCommentsAndFreeLayout) {
  ScratchDir dir;
  const fs::path p = dir.file("free.tensor", "# leading comment\ndims: 2 2  # trailing\n1 2\n\n3\t4 # end\n");
  const DenseTensor t = read_tensor_file(p);
  EXPECT_EQ(t.dims(), (Dims{2, 2}));
  EXPECT_EQ(t(1, 0), 2.0);
  EXPECT_EQ(t(0, 1), 3.0);
  const DenseTensor scalar = read_tensor_file(dir.file("scalar.tensor", "dims:\n2.5\n"));
  EXPECT_EQ(scalar.size(), 1u);
  EXPECT_EQ(scalar[0], 2.5);
}

TEST(Io, CsvRowsBecomeMatrixRows) {
  ScratchDir dir;
  const fs::path p = dir.file("m.csv", "x,y,z\n1,2,3\n4,5,6\n");
  const DenseTensor t = read_csv_matrix(p);
  ASSERT_EQ(t.dims(), (Dims{2, 3}));
  EXPECT_EQ(t(0, 2), 3.0);
  EXPECT_EQ(t(1, 0), 4.0);
  const DenseTensor headerless = read_csv_matrix(dir.file("n.csv", "1,2,3\n4,5,6\n"));
  EXPECT_EQ(max_abs_diff(t, headerless), 0.0);
}

TEST(Io, FormatIsGuessedFromExtension) {
  EXPECT_EQ(guess_format("a/b.csv"), FileFormat::csv);
  EXPECT_EQ(guess_format("a/b.tensor"), FileFormat::tensor);
  EXPECT_EQ(guess_format("b.txt"), FileFormat::tensor);
  EXPECT_THROW(parse_format("json"), std::invalid_argument);
}

TEST(Io, LogitTransform) {
  DenseTensor t(Dims{2, 1}, std::vector<double>{50.0, 75.0});
  logit_transform(t, 100.0);
  EXPECT_NEAR(t[0], 0.0, 1e-15);
  EXPECT_NEAR(t[1], std::log(3.0), 1e-15);
  DenseTensor edge(Dims{1, 1}, std::vector<double>{0.0});
  EXPECT_THROW(logit_transform(edge), ModelError);
}

TEST(Cli, BlocksDirReassemblesTheFit) {
  ScratchDir dir;
  const fs::path out = dir.path() / "blocks";
  const Outcome o = invoke({"fit", "--input", (kGolden / "matrix.csv").string(), "--blocks-dir", out.string()});
  ASSERT_EQ(o.code, kExitOk) << o.err;
  const DenseTensor fitted = read_tensor_file(out / "fitted.tensor");
  DenseTensor sum(fitted.dims());
  broadcast_add(sum, read_tensor_file(out / "mean.tensor"), 0b00);
  broadcast_add(sum, read_tensor_file(out / "effect_1.tensor"), 0b01);
  broadcast_add(sum, read_tensor_file(out / "effect_2.tensor"), 0b10);
  broadcast_add(sum, read_tensor_file(out / "effect_1_2.tensor"), 0b11);
  EXPECT_LT(max_abs_diff(sum, fitted), 1e-12);
}

TEST(Cli, OutputFileMatchesStdout) {
  ScratchDir dir;
  const std::vector<std::string> base = {"estimate", "--input", (kGolden / "matrix.csv").string(), "--json"};
  const Outcome direct = invoke(base);
  std::vector<std::string> to_file = base;
  to_file.insert(to_file.end(), {"--output", (dir.path() / "e.json").string()});
  const Outcome o = invoke(to_file);
  ASSERT_EQ(o.code, kExitOk);
  EXPECT_TRUE(o.out.empty());
  std::ifstream in(dir.path() / "e.json");
  std::stringstream body;
  body << in.rdbuf();
  EXPECT_EQ(body.str(), direct.out);
}

TEST(Cli, SeededRunsAreByteIdentical) {
  const std::vector<std::vector<std::string>> commands = {
      {"simulate", "--set", "study=level", "--set", "dims=8,6", "--set", "n_reps=300", "--seed", "11", "--json"},
      {"simulate", "--set", "study=power", "--set", "dims=8,6", "--set", "n_reps=200", "--set", "threads=3",
       "--seed", "5"},
      {"compare", "--set", "dims=10,8", "--set", "n_reps=20", "--set", "threads=2", "--seed", "3"},
      {"fit", "--input", (kGolden / "small.tensor").string(), "--json", "--dump-c"},
  };
  for (const auto& args : commands) {
    const Outcome first = invoke(args);
    const Outcome second = invoke(args);
    ASSERT_EQ(first.code, kExitOk) << first.err;
    EXPECT_EQ(first.out, second.out);
  }
}

TEST(Cli, ThreadCountDoesNotChangeResults) {
  const auto run_with = [](const std::string& threads) {
    return invoke({"simulate", "--set", "study=special_case", "--set", "dims=10,10", "--set", "n_reps=200",
                   "--set", "threads=" + threads, "--seed", "9", "--json"});
  };
  json one = json::parse(run_with("1").out);
  json four = json::parse(run_with("4").out);
  EXPECT_EQ(one["result"], four["result"]);
}

TEST(Cli, CompareTextIsCsv) {
  const Outcome o = invoke({"compare", "--set", "dims=10,8", "--set", "n_reps=10", "--seed", "1"});
  ASSERT_EQ(o.code, kExitOk) << o.err;
  std::istringstream lines(o.out);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "dist,estimator,mse,se,log_relative_risk");
  int rows = 0;
  while (std::getline(lines, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 4) << line;
    ++rows;
  }
  EXPECT_GT(rows, 2);
}

TEST(Cli, ConfigFileAndOverrides) {
  ScratchDir dir;
  const fs::path cfg = dir.file("study.cfg", "# risk study\nstudy = risk\ndims = 8, 7\nn_reps = 4\nseed = 2\n");
  const Outcome o = invoke({"simulate", "--config", cfg.string(), "--set", "n_reps=3", "--json"});
  ASSERT_EQ(o.code, kExitOk) << o.err;
  const json doc = json::parse(o.out);
  EXPECT_EQ(doc["study"], "risk");
  EXPECT_EQ(doc["config"]["n_reps"], "3");
  EXPECT_EQ(doc["result"]["n_reps"], 3);
}

// Removing the fitted lower-order and sparse interaction structure should not
// leave a residual that looks more heavy tailed than the data.
TEST(Cli, PropertyResidualStatisticDoesNotExceedData) {
  ScratchDir dir;
  std::mt19937_64 gen(123);
  std::normal_distribution<double> normal;
  std::exponential_distribution<double> expo;
  std::bernoulli_distribution sign;
  int checked = 0;
  for (int rep = 0; rep < 12; ++rep) {
    DenseTensor y(Dims{12, 10});
    for (std::size_t i = 0; i < 12; ++i) {
      for (std::size_t j = 0; j < 10; ++j) {
        const double laplace = (sign(gen) ? 1.0 : -1.0) * expo(gen) * (1.0 + rep % 3);
        y(i, j) = 0.3 * i - 0.2 * j + laplace + normal(gen);
      }
    }
    const fs::path in = dir.path() / ("y" + std::to_string(rep) + ".tensor");
    write_tensor_file(in, y);
    const fs::path blocks = dir.path() / ("b" + std::to_string(rep));
    const json fit = invoke_json({"fit", "--input", in.string(), "--blocks-dir", blocks.string()});
    if (fit["route"] != "iterative") continue;
    ++checked;
    DenseTensor residual = y;
    const DenseTensor fitted = read_tensor_file(blocks / "fitted.tensor");
    for (std::size_t i = 0; i < y.size(); ++i) residual[i] -= fitted[i];
    const fs::path res = dir.path() / ("r" + std::to_string(rep) + ".tensor");
    write_tensor_file(res, residual);
    const json a = invoke_json({"test", "--input", in.string()});
    const json b = invoke_json({"test", "--input", res.string()});
    EXPECT_LE(b["statistic"].get<double>(), a["statistic"].get<double>() + 1e-12) << "rep " << rep;
  }
  EXPECT_GE(checked, 6);
}

TEST(Config, DefaultsAndErrors) {
  const StudyConfig risk = make_study_config({{"study", "risk"}});
  EXPECT_EQ(risk.sim.n_reps, 500u);
  const StudyConfig level = make_study_config({{"study", "level"}});
  EXPECT_EQ(level.sim.n_reps, 10000u);
  EXPECT_EQ(level.sim.c_dist.kind, InteractionDist::Kind::normal);
  EXPECT_THROW(make_study_config({{"dims", "5"}}), std::invalid_argument);
  EXPECT_THROW(make_study_config({{"alpha", "1.5"}}), std::invalid_argument);
  EXPECT_THROW(split_assignment("novalue"), std::invalid_argument);
}

TEST(RealData, OptionalDatasetsLoad) {
  const char* root = std::getenv("LANOVA_DATA_DIR");
  if (root == nullptr) GTEST_SKIP() << "LANOVA_DATA_DIR not set";
  int found = 0;
  for (const auto& entry : fs::directory_iterator(root)) {
    const auto ext = entry.path().extension();
    if (ext != ".csv" && ext != ".tensor") continue;
    ++found;
    const Outcome o = invoke({"estimate", "--input", entry.path().string()});
    EXPECT_EQ(o.code, kExitOk) << entry.path() << "\n" << o.err;
  }
  if (found == 0) GTEST_SKIP() << "no data files in " << root;
}

}  // namespace
}  // namespace lanova::cli
