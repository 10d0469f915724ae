#include <gtest/gtest.h>

#include <filesystem>
#include <algorithm>
#include <sstream>

#include "market_builder.hpp"
#include "stablehh/cli.hpp"
#include "stablehh/serialization.hpp"

namespace fs = std::filesystem;
using namespace stablehh;

namespace {

const std::string kFixtures = STABLEHH_FIXTURES;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("stablehh_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return cli::run_pipeline(args, out_, err_);
  }

  std::string out() const { return out_.str(); }
  std::string err() const { return err_.str(); }

  void write_markets(const std::string& name, const MarriageMarket& m) {
    io::write_file(path(name), io::markets_to_json(std::vector<MarriageMarket>{m}));
  }

 private:
  fs::path dir_;
  std::ostringstream out_, err_;
};

std::string slurp(const std::string& p) { return io::read_file(p); }

}  // namespace

TEST_F(Cli, IngestReproducesGoldenMarket) {
  ASSERT_EQ(run({"ingest", "--agents", kFixtures + "/agents.csv", "--households", kFixtures + "/households.csv",
                 "--out", path("m.json")}),
            0)
      << err();
  EXPECT_EQ(slurp(path("m.json")), slurp(kFixtures + "/golden_market.json"));
}

TEST_F(Cli, SynthThenStabilityReportsUnitIndices) {
  ASSERT_EQ(run({"synth", "--seed", "3", "--couples", "6", "--singles", "2", "--out", path("m.json"), "--truth",
                 path("t.json")}),
            0);
  ASSERT_EQ(run({"stability", "--market", path("m.json"), "--out", path("s.json"), "--csv", path("s.csv")}), 0)
      << err();
  ASSERT_EQ(run({"report", "--stability", path("s.json")}), 0);
  EXPECT_NE(out().find("mean            1.0000      1.0000"), std::string::npos) << out();
  EXPECT_EQ(out().find("may not be unique"), std::string::npos);
  EXPECT_EQ(slurp(path("s.csv")).rfind("region,male,female,kind,index,income,loss\n", 0), 0u);
  const auto truth = io::truth_from_json(slurp(path("t.json")));
  EXPECT_EQ(truth.couples.size(), 6u);
}

TEST_F(Cli, BoundsPipelineAndReport) {
  ASSERT_EQ(run({"synth", "--seed", "5", "--couples", "4", "--model", "spc", "--out", path("m.json")}), 0);
  ASSERT_EQ(run({"stability", "--model", "spc", "--split", "endogenous", "--market", path("m.json"), "--out",
                 path("s.json")}),
            0)
      << err();
  ASSERT_EQ(run({"bounds", "--model", "spc", "--market", path("m.json"), "--report", path("s.json"), "--out",
                 path("b.csv"), "--json", path("b.json"), "--emit-plot-data", path("p.csv")}),
            0)
      << err();
  const std::string csv = slurp(path("b.csv"));
  EXPECT_EQ(csv.rfind("couple_id,target,lower,upper,naive_lower,naive_upper\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 * 4);
  EXPECT_EQ(slurp(path("p.csv")).rfind("couple_id,wage_ratio,log_wage_ratio,lower,upper\n", 0), 0u);
  ASSERT_EQ(run({"report", "--stability", path("s.json"), "--bounds", path("b.json"), "--out", path("r.txt")}), 0);
  const std::string table = slurp(path("r.txt"));
  EXPECT_NE(table.find("private share"), std::string::npos);
  EXPECT_NE(table.find("configurable"), std::string::npos);
}

TEST_F(Cli, RerunsAreByteIdentical) {
  auto pipeline = [&](const std::string& tag, const std::string& jobs) {
    EXPECT_EQ(run({"synth", "--seed", "11", "--couples", "5", "--singles", "2", "--out", path(tag + "m.json")}), 0);
    EXPECT_EQ(run({"stability", "--market", path(tag + "m.json"), "--out", path(tag + "s.json"), "--jobs", jobs}), 0);
    EXPECT_EQ(run({"bounds", "--market", path(tag + "m.json"), "--report", path(tag + "s.json"), "--out",
                   path(tag + "b.csv"), "--json", path(tag + "b.json"), "--jobs", jobs}),
              0);
  };
  pipeline("a", "1");
  pipeline("b", "3");
  for (const char* f : {"m.json", "s.json", "b.csv", "b.json"})
    EXPECT_EQ(slurp(path(std::string("a") + f)), slurp(path(std::string("b") + f))) << f;
}

TEST_F(Cli, BoundsWithoutReportIsMissingFile) {
  ASSERT_EQ(run({"synth", "--seed", "1", "--couples", "2", "--out", path("m.json")}), 0);
  EXPECT_EQ(run({"bounds", "--market", path("m.json"), "--report", path("none.json"), "--out", path("b.csv")}),
            cli::kMissingFile);
  EXPECT_EQ(run({"stability", "--market", path("none.json"), "--out", path("s.json")}),
            cli::kMissingFile);
}

TEST_F(Cli, InvalidMarketListsViolations) {
  MarriageMarket m = stablehh::testing::MarketBuilder()
                         .couple("h1", "m1", "w1", stablehh::testing::jc_bundle(40, 30, 0, 0))
                         .couple("h2", "m2", "w2", stablehh::testing::jc_bundle(40, 30, 0, 0))
                         .build();
  m.agents[1].spouse_id = "m2";
  write_markets("bad.json", m);
  EXPECT_EQ(run({"stability", "--market", path("bad.json"), "--out", path("s.json")}),
            cli::kValidation);
  EXPECT_NE(err().find("validation failed"), std::string::npos);
  EXPECT_NE(err().find("m1"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("s.json")));
}

TEST_F(Cli, WrongModelForMarketIsValidationError) {
  ASSERT_EQ(run({"synth", "--seed", "2", "--couples", "2", "--model", "spc", "--out", path("m.json")}), 0);
  EXPECT_EQ(run({"stability", "--model", "jc", "--market", path("m.json"), "--out", path("s.json")}),
            cli::kValidation);
  ASSERT_EQ(run({"stability", "--model", "spc", "--market", path("m.json"), "--out", path("s.json")}), 0);
  EXPECT_EQ(run({"bounds", "--model", "spc", "--binding", "--market", path("m.json"), "--report", path("s.json"),
                 "--out", path("b.csv")}),
            cli::kValidation);
}

TEST_F(Cli, UnaffordableTransfersAreASolverExit) {
  stablehh::testing::MarketBuilder b;
  b.couple("h1", "m1", "w1", stablehh::testing::spc_bundle(40, 30, 25), 3);
  b.market().agents[0].wage = 100.0;
  write_markets("m.json", b.build());
  EXPECT_EQ(run({"stability", "--model", "spc", "--market", path("m.json"), "--out", path("s.json")}),
            cli::kSolver);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run({"frobnicate"}), cli::kFailure);
  EXPECT_EQ(run({"synth", "--seed", "1", "--couples", "0", "--out", path("m.json")}),
            cli::kFailure);
  EXPECT_EQ(run({"stability", "--split", "sideways", "--market", "x", "--out", "y"}),
            cli::kFailure);
  EXPECT_EQ(run({"--help"}), 0);
  EXPECT_NE(out().find("stability"), std::string::npos);
}
