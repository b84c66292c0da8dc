#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "femtoq/report.hpp"
#include "femtoq/scenario.hpp"

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("femtoq_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Runs the binary with `args`, returns its exit status; stderr lands in err().
  int femtoq(const std::string& args, const std::string& env = {}) {
    const std::string cmd = env + " \"" FEMTOQ_BIN "\" " + args + " > \"" + (dir_ / "stdout").string() +
                            "\" 2> \"" + (dir_ / "stderr").string() + "\"";
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  }

  std::string slurp(const fs::path& p) const {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }
  std::string err() const { return slurp(dir_ / "stderr"); }

  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name) << text;
    return dir_ / name;
  }

  std::string out_flag() const { return "--out \"" + dir_.string() + "\""; }

  fs::path dir_;
};

const std::string kScenarios = FEMTOQ_SCENARIOS;

}  // namespace

TEST_F(Cli, ZeroIterationRunWritesHeaderOnly) {
  ASSERT_EQ(femtoq("run " + kScenarios + "/empty.scenario " + out_flag()), 0) << err();
  EXPECT_EQ(slurp(dir_ / "empty.csv"), femtoq::trace_csv_header(6) + "\n");
  EXPECT_TRUE(fs::exists(dir_ / "empty.summary.txt"));
}

TEST_F(Cli, SameSeedSameBytes) {
  const auto sc = write("det.scenario", "paradigm = cl\nfemtocells = 3\niterations = 2000\nlog_stride = 10\n"
                                        "deploy = 1000,1,docitive\n");
  fs::create_directories(dir_ / "a");
  fs::create_directories(dir_ / "b");
  ASSERT_EQ(femtoq("run " + sc.string() + " --seed 5 --out " + (dir_ / "a").string()), 0) << err();
  ASSERT_EQ(femtoq("run " + sc.string() + " --seed 5 --out " + (dir_ / "b").string()), 0) << err();
  const std::string a = slurp(dir_ / "a" / "det.csv");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(dir_ / "b" / "det.csv"));
  ASSERT_EQ(femtoq("run " + sc.string() + " --seed 6 --out " + (dir_ / "b").string()), 0) << err();
  EXPECT_NE(a, slurp(dir_ / "b" / "det.csv"));
}

TEST_F(Cli, ConfigErrorExitsOneWithLine) {
  const auto sc = write("bad.scenario", "alpha = 0.5\n\nwarp_speed = 9\n");
  EXPECT_EQ(femtoq("run " + sc.string() + " " + out_flag()), 1);
  EXPECT_NE(err().find("bad.scenario:3:"), std::string::npos) << err();
  EXPECT_EQ(femtoq("run " + (dir_ / "missing.scenario").string()), 1);
  EXPECT_EQ(femtoq("frobnicate"), 1);
}

TEST_F(Cli, InfeasibleExitsTwo) {
  const auto unplaceable = write("tight.scenario", "femtocells = 3\nmax_fbs_foreign_user = 1.5\n"
                                                   "placement_retries = 100\niterations = 5\n");
  EXPECT_EQ(femtoq("run " + unplaceable.string() + " " + out_flag()), 2) << err();

  const auto above = write("above.scenario", "algorithm = cpcq\nfemtocells = 1\ntarget_mode = macro_offset\n"
                                             "target = 5\n");
  EXPECT_EQ(femtoq("oracle " + above.string()), 2) << err();
}

TEST_F(Cli, OracleReportsOptimum) {
  ASSERT_EQ(femtoq("oracle " + kScenarios + "/bench_cpcq.scenario --oracle-threads 2"), 0) << err();
  const std::string out = slurp(dir_ / "stdout");
  EXPECT_NE(out.find("evaluated = 729"), std::string::npos) << out;
  EXPECT_NE(out.find("oracle_femto = "), std::string::npos);
}

TEST_F(Cli, PresetEmitsValidScenarios) {
  ASSERT_EQ(femtoq("preset fig2 --emit-only " + out_flag()), 0) << err();
  int count = 0;
  for (const auto& e : fs::directory_iterator(dir_)) {
    if (e.path().extension() != ".scenario") continue;
    ++count;
    const auto sc = femtoq::load_scenario(e.path());
    EXPECT_EQ(sc.config.algorithm, femtoq::Algorithm::Dpcq);
    EXPECT_DOUBLE_EQ(sc.config.target, 6.0);
    EXPECT_EQ(sc.config.subcarrier_count(), 6U);
    EXPECT_EQ(sc.config.initial_femtos, 5U);
    EXPECT_TRUE(sc.config.epsilon_off_at.has_value());
    EXPECT_FALSE(sc.schedule.events.empty());
  }
  EXPECT_EQ(count, 4);
  EXPECT_EQ(femtoq("preset fig7 " + out_flag()), 1);
}

TEST_F(Cli, SweepWritesPerSeedAndAggregate) {
  const auto sc = write("sw.scenario", "femtocells = 2\niterations = 300\nlog_stride = 10\n");
  ASSERT_EQ(femtoq("sweep " + sc.string() + " --seeds 3..6 --jobs 3 " + out_flag()), 0) << err();
  for (int s = 3; s <= 6; ++s) EXPECT_TRUE(fs::exists(dir_ / ("sw_seed" + std::to_string(s) + ".csv")));
  const std::string agg = slurp(dir_ / "sw_sweep.csv");
  EXPECT_EQ(std::count(agg.begin(), agg.end(), '\n'), 5);

  fs::create_directories(dir_ / "serial");
  ASSERT_EQ(femtoq("sweep " + sc.string() + " --seeds 3..6 --jobs 1 --out " + (dir_ / "serial").string()), 0);
  EXPECT_EQ(slurp(dir_ / "serial" / "sw_seed5.csv"), slurp(dir_ / "sw_seed5.csv"));
  EXPECT_EQ(femtoq("sweep " + sc.string() + " --seeds 9..2 " + out_flag()), 1);
}

TEST_F(Cli, PlotAndEnvironmentOutput) {
  const auto sc = write("pl.scenario", "femtocells = 2\niterations = 200\nlog_stride = 5\n");
  ASSERT_EQ(femtoq("run " + sc.string() + " --plot", "FEMTOQ_OUT=\"" + dir_.string() + "\""), 0) << err();
  EXPECT_TRUE(fs::exists(dir_ / "pl.csv"));
  EXPECT_NE(slurp(dir_ / "pl_macro.svg").find("<svg"), std::string::npos);
  EXPECT_NE(slurp(dir_ / "pl_femto.svg").find("<polyline"), std::string::npos);
}
