#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pbchron/cli.hpp"

using pbchron::cli::dispatch;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_data_rows(const std::string& content) {
  std::istringstream ss(content);
  std::string line;
  int rows = 0;
  bool header_seen = false;
  while (std::getline(ss, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    ++rows;
  }
  return rows;
}

struct TempFile {
  std::string path;
  explicit TempFile(std::string p) : path(std::move(p)) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("usage errors and help map to the right exit codes") {
  CHECK(dispatch({}) == 1);                       // a subcommand is required
  CHECK(dispatch({"--help"}) == 0);
  CHECK(dispatch({"--version"}) == 0);
  CHECK(dispatch({"simulate", "--help"}) == 0);
  CHECK(dispatch({"frobnicate"}) == 1);
  CHECK(dispatch({"simulate", "--scenario", "2"}) == 1);           // --out missing
  CHECK(dispatch({"simulate", "--scenario", "9", "--out", "x"}) == 1);
  CHECK(dispatch({"simulate", "--out", "x.csv"}) == 1);            // no curve at all
  CHECK(dispatch({"crs", "--input", "x.csv"}) == 1);               // --out missing
  CHECK(dispatch({"plot-data", "--kind", "nonsense", "--input", "a", "--out", "b"}) == 1);
}

TEST_CASE("missing and malformed inputs exit with one, not a crash") {
  TempFile out("cli_missing_out.csv");
  CHECK(dispatch({"crs", "--input", "no_such_core.csv", "--out", out.path}) == 1);
  CHECK(dispatch({"plum", "--input", "no_such_core.csv", "--out", out.path}) == 1);

  TempFile junk("cli_junk.csv");
  {
    std::ofstream f(junk.path);
    f << "not,a,real,header\n1,2,3,4\n";
  }
  CHECK(dispatch({"crs", "--input", junk.path, "--out", out.path}) == 1);
}

TEST_CASE("monte carlo draw count is validated") {
  TempFile core("cli_core_mc.csv");
  TempFile out("cli_out_mc.csv");
  REQUIRE(dispatch({"simulate", "--scenario", "1", "--seed", "3", "--out", core.path}) == 0);
  CHECK(dispatch({"crs", "--input", core.path, "--variant", "mc", "--draws", "0", "--out",
                  out.path}) == 1);
  CHECK(dispatch({"crs", "--input", core.path, "--variant", "bogus", "--out", out.path}) == 1);
  CHECK(dispatch({"crs", "--input", core.path, "--variant", "mc", "--draws", "50", "--seed", "7",
                  "--out", out.path}) == 0);
  CHECK(count_data_rows(read_file(out.path)) == 29);
}

TEST_CASE("the simulate to date to plot pipeline runs end to end") {
  TempFile core("cli_core.csv");
  TempFile chron("cli_chron.csv");
  TempFile plum_out("cli_plum.csv");
  TempFile plot("cli_plot.csv");

  REQUIRE(dispatch({"simulate", "--scenario", "2", "--no-noise", "--out", core.path}) == 0);
  const std::string core_text = read_file(core.path);
  CHECK(core_text.rfind("# pbchron 0.1.0 | simulate --scenario 2 --no-noise --out", 0) == 0);
  CHECK(count_data_rows(core_text) == 30);

  REQUIRE(dispatch({"crs", "--input", core.path, "--out", chron.path}) == 0);
  CHECK(count_data_rows(read_file(chron.path)) == 29);

  CHECK(dispatch({"plot-data", "--kind", "agedepth", "--input", chron.path, "--out", plot.path}) ==
        1);  // --scenario required
  REQUIRE(dispatch({"plot-data", "--kind", "agedepth", "--input", chron.path, "--scenario", "2",
                    "--out", plot.path}) == 0);
  const std::string plot_text = read_file(plot.path);
  CHECK(plot_text.find("depth,mean,lower95,upper95,truth") != std::string::npos);
  CHECK(count_data_rows(plot_text) == 29);

  REQUIRE(dispatch({"plum", "--input", core.path, "--iterations", "1200", "--burn-in", "300",
                    "--thin", "3", "--seed", "2", "--out", plum_out.path}) == 0);
  CHECK(count_data_rows(read_file(plum_out.path)) == 30);
}

TEST_CASE("custom age curves simulate through the flag set") {
  TempFile core("cli_custom.csv");
  REQUIRE(dispatch({"simulate", "--age-linear", "4", "--age-quadratic", "0.1", "--phi", "120",
                    "--supported", "12", "--no-noise", "--core-id", "Custom", "--out",
                    core.path}) == 0);
  const std::string text = read_file(core.path);
  CHECK(text.find("core_id=Custom") != std::string::npos);
  CHECK(count_data_rows(text) == 30);
  // Custom curves require explicit supply and supported levels.
  CHECK(dispatch({"simulate", "--age-linear", "4", "--no-noise", "--out", core.path}) == 1);
}

TEST_CASE("experiment writes records and summaries that feed both plot kinds") {
  TempFile rec("cli_rec.csv");
  TempFile sum("cli_sum.csv");
  TempFile accpre("cli_accpre.csv");
  TempFile bydepth("cli_bydepth.csv");
  REQUIRE(dispatch({"experiment", "--scenarios", "1", "--percents", "50,100", "--replicates", "2",
                    "--engines", "ci", "--seed", "12", "--records-out", rec.path, "--summary-out",
                    sum.path}) == 0);
  const std::string rec_text = read_file(rec.path);
  CHECK(rec_text.find("scenario,percent,replicate,method,depth,true_age") != std::string::npos);
  CHECK(count_data_rows(rec_text) > 20);
  const std::string sum_text = read_file(sum.path);
  CHECK(sum_text.find("CI-CRS,all,50") != std::string::npos);
  CHECK(sum_text.find("overall") != std::string::npos);

  REQUIRE(dispatch({"plot-data", "--kind", "accpre", "--input", rec.path, "--out", accpre.path}) ==
          0);
  const std::string accpre_text = read_file(accpre.path);
  CHECK(accpre_text.find("percent,method,mean_offset") != std::string::npos);
  CHECK(count_data_rows(accpre_text) == 2);  // percents 50 and 100

  REQUIRE(dispatch({"plot-data", "--kind", "depth-normalized", "--input", rec.path, "--out",
                    bydepth.path}) == 0);
  CHECK(count_data_rows(read_file(bydepth.path)) == count_data_rows(rec_text));

  CHECK(dispatch({"experiment", "--scenarios", "1", "--percents", "50", "--engines", "warp",
                  "--records-out", rec.path, "--summary-out", sum.path}) == 1);
  CHECK(dispatch({"experiment", "--scenarios", "1", "--percents", "12", "--engines", "ci",
                  "--records-out", rec.path, "--summary-out", sum.path}) == 1);
}

TEST_CASE("identical invocations write identical bytes") {
  TempFile core("cli_det_core.csv");
  const std::vector<std::string> args{"simulate", "--scenario", "3", "--seed", "42",
                                      "--out",    core.path};
  REQUIRE(dispatch(args) == 0);
  const std::string first = read_file(core.path);
  REQUIRE(dispatch(args) == 0);
  CHECK(read_file(core.path) == first);

  TempFile chron("cli_det_chron.csv");
  const std::vector<std::string> mc_args{"crs",     "--input", core.path, "--variant", "mc",
                                         "--draws", "80",      "--seed",  "5",         "--out",
                                         chron.path};
  REQUIRE(dispatch(mc_args) == 0);
  const std::string mc_first = read_file(chron.path);
  REQUIRE(dispatch(mc_args) == 0);
  CHECK(read_file(chron.path) == mc_first);
}
