#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "commands.h"
#include "config.h"
#include "degctrl/errors.h"

namespace degctrl::cli {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("degctrl_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

TEST(Config, RoundTrip) {
  ExperimentConfig c;
  EXPECT_EQ(parse_config(serialize_config(c)), c);
  c.alpha = {0.1, 1.0 / 3.0};
  c.T = 0.1 + 0.2;
  c.A = {{-1.0, 1e-17}, {0.0, 2.5}};
  c.B = {{1.0}, {0.0}};
  c.initial.kind = "explicit";
  c.initial.coeffs = {{1.0, 2.0}, {std::numbers::pi, -0.0}};
  c.J_list = {3, 9};
  EXPECT_EQ(parse_config(serialize_config(c)), c);
}

TEST(Config, ScalarAlphaAndDefaults) {
  const ExperimentConfig c = parse_config(R"({"alpha": 1.25, "K": 3})");
  EXPECT_EQ(c.alpha, std::vector<double>{1.25});
  EXPECT_EQ(c.K, 3);
  EXPECT_EQ(c.J, ExperimentConfig{}.J);
}

TEST(Config, RejectsUnknownKeysAndBadTypes) {
  EXPECT_THROW(parse_config(R"({"alpah": 0.5})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"initial": {"kind": "ones", "size": 3}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"K": "twelve"})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"K": 3,)"), ConfigError);
  EXPECT_THROW(parse_config("[1, 2]"), ConfigError);
}

TEST(Config, Validation) {
  ExperimentConfig c;
  c.alpha = {2.0};
  EXPECT_THROW(validate(c, "spectrum"), ConfigError);
  c.alpha = {0.5};
  EXPECT_NO_THROW(validate(c, "spectrum"));
  EXPECT_THROW(validate(c, "control2d"), ConfigError);  // needs two exponents
  EXPECT_THROW(validate(c, "nosuch"), ConfigError);
  c.A = {{0.0, 1.0}};
  EXPECT_THROW(validate(c, "kalman"), ConfigError);
  c.A = {{0.0, 1.0}, {0.0, 0.0}};
  c.B = {{0.0}, {1.0}};
  EXPECT_NO_THROW(validate(c, "kalman"));
  c.initial.kind = "explicit";
  c.initial.coeffs = {{1.0, 2.0}, {3.0, 4.0}};
  EXPECT_THROW(validate(c, "control1d"), ConfigError);  // K = 12 columns expected
  c.initial.kind = "sideways";
  EXPECT_THROW(validate(c, "control1d"), ConfigError);
  ExperimentConfig d;
  d.omega = {0.7, 0.3};
  EXPECT_THROW(validate(d, "spectralineq"), ConfigError);
  d.omega = {0.3, 0.7};
  d.J_list = {5, 3};
  EXPECT_THROW(validate(d, "spectralineq"), ConfigError);
}

TEST(Commands, SpectrumClassicalColumn) {
  ExperimentConfig c;
  c.alpha = {0.0};
  c.K = 5;
  c.M = 400;
  const fs::path out = scratch_dir("spectrum");
  run_command("spectrum", c, out, 0);
  const auto rows = read_csv(out / "spectrum.csv");
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0][3], "eigenvalue");
  for (int k = 1; k <= 5; ++k) {
    const double lam = std::stod(rows[k][3]);
    EXPECT_NEAR(lam / (k * k * std::numbers::pi * std::numbers::pi), 1.0, 1e-10);
  }
  // 17 significant digits.
  std::string digits;
  for (char ch : rows[1][3]) {
    if (std::isdigit(static_cast<unsigned char>(ch))) digits += ch;
  }
  EXPECT_EQ(digits.size(), 17u);
}

TEST(Commands, Control2dZeroState) {
  ExperimentConfig c;
  c.alpha = {0.5, 0.5};
  c.K = 4;
  c.J = 4;
  c.K_stop = 2;
  c.initial.kind = "zero";
  const fs::path out = scratch_dir("control2d_zero");
  run_command("control2d", c, out, 0);
  const auto sum = read_csv(out / "control2d_summary.csv");
  ASSERT_EQ(sum.size(), 2u);
  EXPECT_EQ(sum[0][2], "final_ratio");
  EXPECT_EQ(std::stod(sum[1][2]), 0.0);
  const auto field = read_csv(out / "control2d_field.csv");
  for (size_t i = 1; i < field.size(); ++i) EXPECT_EQ(std::stod(field[i][3]), 0.0);
}

TEST(Commands, CostCurveMonotone) {
  ExperimentConfig c;
  c.alpha = {0.5};
  c.K = 4;
  c.T_list = {1.0, 0.5, 0.25};
  const fs::path out = scratch_dir("costcurve");
  run_command("costcurve", c, out, 0);
  const auto rows = read_csv(out / "costcurve.csv");
  ASSERT_EQ(rows.size(), 4u);
  for (size_t i = 2; i < rows.size(); ++i) EXPECT_GT(std::stod(rows[i][1]), std::stod(rows[i - 1][1]));
}

TEST(Commands, RandomStatesFollowSeed) {
  ExperimentConfig c;
  c.alpha = {0.5};
  c.K = 4;
  c.T = 1.0;
  c.initial.kind = "random";
  const fs::path a = scratch_dir("seed_a"), b = scratch_dir("seed_b"), d = scratch_dir("seed_d");
  run_command("control1d", c, a, 11);
  run_command("control1d", c, b, 11);
  run_command("control1d", c, d, 12);
  EXPECT_EQ(slurp(a / "control1d.csv"), slurp(b / "control1d.csv"));
  EXPECT_NE(slurp(a / "control1d.csv"), slurp(d / "control1d.csv"));
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "degctrl_cli");
  std::vector<char*> argv;
  for (auto& s : args) argv.push_back(s.data());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path p = fs::temp_directory_path() / ("degctrl_cli_test_" + name + ".json");
  std::ofstream(p) << text;
  return p;
}

TEST(CliMain, ExitCodes) {
  const fs::path out = scratch_dir("exit");
  const fs::path good = write_config("good", R"({"alpha": [0.0], "K": 3, "M": 300})");
  EXPECT_EQ(run_cli({"spectrum", "--config", good.string(), "--out", out.string()}), 0);
  EXPECT_TRUE(fs::exists(out / "spectrum.csv"));

  EXPECT_EQ(run_cli({"spectrum", "--config", "/nonexistent/config.json"}), 2);
  EXPECT_EQ(run_cli({"bogus", "--config", good.string()}), 2);
  EXPECT_EQ(run_cli({"spectrum"}), 2);
  const fs::path bad = write_config("bad", R"({"alpha": [3.0]})");
  EXPECT_EQ(run_cli({"spectrum", "--config", bad.string(), "--out", out.string()}), 2);

  // A conditioning cap of 10 cannot be met by any nontrivial moment problem.
  const fs::path refuse = write_config("refuse", R"({"alpha": 0.5, "K": 6, "cond_cap": 10})");
  EXPECT_EQ(run_cli({"control1d", "--config", refuse.string(), "--out", out.string()}), 3);
  const fs::path uncontrollable = write_config(
      "uncontrollable",
      R"({"alpha": 0.5, "K": 3, "A": [[0, 0], [0, 0]], "B": [[1], [1]], "initial": {"kind": "ones"}})");
  EXPECT_EQ(run_cli({"control1d", "--config", uncontrollable.string(), "--out", out.string()}), 3);
}

TEST(CliMain, ThreadsDoNotChangeOutput) {
  const fs::path cfg = write_config(
      "threads", R"({"alpha": [0.5, 0.5], "K": 6, "J": 6, "K_stop": 3, "field_nt": 5, "field_ny": 9})");
  const fs::path a = scratch_dir("threads1"), b = scratch_dir("threads4");
  ASSERT_EQ(run_cli({"control2d", "--config", cfg.string(), "--out", a.string(), "--threads", "1"}), 0);
  ASSERT_EQ(run_cli({"control2d", "--config", cfg.string(), "--out", b.string(), "--threads", "4"}), 0);
  for (const char* f : {"control2d.csv", "control2d_field.csv", "control2d_summary.csv"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
}

}  // namespace
}  // namespace degctrl::cli
