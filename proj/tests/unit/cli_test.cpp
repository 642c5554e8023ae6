#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>

#include "support.hpp"
#include "xstab/common.hpp"
#include "xstab/importance.hpp"

namespace fs = std::filesystem;
using namespace xstab;
using namespace xstab::testing;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(XSTAB_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_vector(const fs::path& p, const ImportanceVector& v) { write_file(p, importance_to_json(v)); }

ImportanceVector shap_vector(std::vector<std::string> feature_names, std::vector<double> scores) {
  auto v = vec(scores, ImportanceSource::MeanAbsShap, std::move(feature_names));
  v.signed_means = v.scores;
  return v;
}

}  // namespace

TEST(Cli, SynthIsDeterministic) {
  const auto dir = fresh_dir("xstab_cli_synth");
  ASSERT_EQ(run_cli("--seed 5 --out " + (dir / "a").string() + " synth"), 0);
  ASSERT_EQ(run_cli("--seed 5 --out " + (dir / "b").string() + " synth"), 0);
  EXPECT_EQ(read_file(dir / "a" / "dataset.csv"), read_file(dir / "b" / "dataset.csv"));
  EXPECT_EQ(read_file(dir / "a" / "schema.json"), read_file(dir / "b" / "schema.json"));
}

TEST(Cli, CompareScenarioModeWritesAllFormats) {
  const auto dir = fresh_dir("xstab_cli_compare");
  write_vector(dir / "a.json", shap_vector({"x", "y", "z"}, {0.3, 0.2, 0.1}));
  write_vector(dir / "b.json", shap_vector({"x", "y", "z"}, {0.1, 0.2, 0.3}));
  const std::string args = "--out " + (dir / "out").string() + " compare --mode scenario --shap " +
                           (dir / "a.json").string() + " --shap " + (dir / "b.json").string();
  ASSERT_EQ(run_cli(args), 0);
  for (const char* ext : {"md", "csv", "json"}) {
    EXPECT_TRUE(fs::exists(dir / "out" / (std::string("cross_scenario.") + ext))) << ext;
  }
}

TEST(Cli, DisjointFeaturesExitWithDegenerateCode) {
  const auto dir = fresh_dir("xstab_cli_disjoint");
  write_vector(dir / "a.json", shap_vector({"x", "y"}, {0.3, 0.2}));
  write_vector(dir / "b.json", shap_vector({"p", "q"}, {0.3, 0.2}));
  EXPECT_EQ(run_cli("compare --mode scenario --shap " + (dir / "a.json").string() + " --shap " +
                    (dir / "b.json").string()),
            2);
}

TEST(Cli, ErrorsExitWithOne) {
  const auto dir = fresh_dir("xstab_cli_errors");
  write_file(dir / "broken.json", "{not json");
  EXPECT_EQ(run_cli("compare --mode scenario --shap " + (dir / "broken.json").string() + " --shap " +
                    (dir / "broken.json").string()),
            1);
  EXPECT_EQ(run_cli("compare --mode scenario --shap " + (dir / "broken.json").string()), 1);
  EXPECT_EQ(run_cli("no-such-command"), 1);
  EXPECT_EQ(run_cli("--help"), 0);
}
