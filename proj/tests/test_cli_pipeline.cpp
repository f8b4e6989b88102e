// Integration tests driving the installed CLI binary end to end. The binary
// path arrives through the MULTIMARKER_CLI environment variable set by CTest.

#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string cli() {
  const char* path = std::getenv("MULTIMARKER_CLI");
  REQUIRE_MESSAGE(path != nullptr, "MULTIMARKER_CLI must point at the built binary");
  return path;
}

int run(const std::string& args) {
  const std::string cmd = cli() + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

int exit_code(int system_status) { return WEXITSTATUS(system_status); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("mmcli_" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("simulate -> fit -> predict round trip satisfies the output schema") {
  TempDir dir;
  REQUIRE(exit_code(run("simulate --study I --scenario S1 --range medium --n 40 --seed 5 "
                        "--output-prefix " + (dir / "sim"))) == 0);
  REQUIRE(fs::exists(dir / "sim_train.csv"));
  REQUIRE(fs::exists(dir / "sim_test.csv"));
  REQUIRE(fs::exists(dir / "sim_truth.csv"));
  REQUIRE(fs::exists(dir / "sim_manifest.json"));

  REQUIRE(exit_code(run("fit --input " + (dir / "sim_train.csv") + " --chain " + (dir / "fit.mmc") +
                        " --seed 2 --iters 500 --burn 100 --no-scale")) == 0);
  REQUIRE(fs::exists(dir / "fit.mmc"));
  REQUIRE(fs::exists(dir / "fit.mmc.manifest.json"));

  REQUIRE(exit_code(run("predict --chain " + (dir / "fit.mmc") + " --input " + (dir / "sim_test.csv") +
                        " --output " + (dir / "pred.csv") + " --seed 3")) == 0);
  const std::string pred = slurp(dir / "pred.csv");
  CHECK(pred.rfind("median,ci_low,ci_high,p_comp_1,p_comp_2,p_comp_3", 0) == 0);
  // 16 data rows (0.4 * 40) plus the header.
  const long lines = std::count(pred.begin(), pred.end(), '\n');
  CHECK(lines == 17);
}

TEST_CASE("byte-identical outputs for equal seeds, different outputs otherwise") {
  TempDir dir;
  REQUIRE(exit_code(run("simulate --study I --scenario S1 --n 30 --seed 9 --output-prefix " +
                        (dir / "a"))) == 0);
  REQUIRE(exit_code(run("simulate --study I --scenario S1 --n 30 --seed 9 --output-prefix " +
                        (dir / "b"))) == 0);
  REQUIRE(exit_code(run("simulate --study I --scenario S1 --n 30 --seed 10 --output-prefix " +
                        (dir / "c"))) == 0);
  CHECK(slurp(dir / "a_train.csv") == slurp(dir / "b_train.csv"));
  CHECK(slurp(dir / "a_train.csv") != slurp(dir / "c_train.csv"));

  REQUIRE(exit_code(run("fit --input " + (dir / "a_train.csv") + " --chain " + (dir / "a.mmc") +
                        " --seed 4 --iters 400 --burn 100 --param-summary " + (dir / "pa.csv"))) == 0);
  REQUIRE(exit_code(run("fit --input " + (dir / "a_train.csv") + " --chain " + (dir / "b.mmc") +
                        " --seed 4 --iters 400 --burn 100 --param-summary " + (dir / "pb.csv"))) == 0);
  CHECK(slurp(dir / "a.mmc") == slurp(dir / "b.mmc"));
  CHECK(slurp(dir / "pa.csv") == slurp(dir / "pb.csv"));

  REQUIRE(exit_code(run("predict --chain " + (dir / "a.mmc") + " --input " + (dir / "a_test.csv") +
                        " --output " + (dir / "p1.csv") + " --seed 6")) == 0);
  REQUIRE(exit_code(run("predict --chain " + (dir / "a.mmc") + " --input " + (dir / "a_test.csv") +
                        " --output " + (dir / "p2.csv") + " --seed 6")) == 0);
  CHECK(slurp(dir / "p1.csv") == slurp(dir / "p2.csv"));
}

TEST_CASE("scaling mismatch at predict time is a guarded failure") {
  TempDir dir;
  REQUIRE(exit_code(run("simulate --study apple --seed 3 --output-prefix " + (dir / "ap"))) == 0);
  // Chain fitted on scaled data (default), then predict demanding no-scale.
  REQUIRE(exit_code(run("fit --input " + (dir / "ap_train.csv") + " --chain " + (dir / "ap.mmc") +
                        " --seed 2 --iters 300 --burn 100")) == 0);
  const int status = exit_code(run("predict --chain " + (dir / "ap.mmc") + " --input " +
                                   (dir / "ap_test.csv") + " --output " + (dir / "p.csv") +
                                   " --no-scale"));
  CHECK(status == 6);  // mismatch category
  CHECK_FALSE(fs::exists(dir / "p.csv"));
}

TEST_CASE("fingerprint verification against the training data") {
  TempDir dir;
  REQUIRE(exit_code(run("simulate --study I --n 30 --seed 12 --output-prefix " + (dir / "s"))) == 0);
  REQUIRE(exit_code(run("fit --input " + (dir / "s_train.csv") + " --chain " + (dir / "s.mmc") +
                        " --seed 2 --iters 300 --burn 100 --no-scale")) == 0);
  // Matching training file passes.
  CHECK(exit_code(run("predict --chain " + (dir / "s.mmc") + " --input " + (dir / "s_test.csv") +
                      " --output " + (dir / "ok.csv") + " --verify-train " +
                      (dir / "s_train.csv"))) == 0);
  // A different dataset fails the check.
  REQUIRE(exit_code(run("simulate --study I --n 30 --seed 13 --output-prefix " + (dir / "t"))) == 0);
  CHECK(exit_code(run("predict --chain " + (dir / "s.mmc") + " --input " + (dir / "s_test.csv") +
                      " --output " + (dir / "bad.csv") + " --verify-train " +
                      (dir / "t_train.csv"))) == 6);
}

TEST_CASE("bench emits the error table with every requested method") {
  TempDir dir;
  REQUIRE(exit_code(run("bench --study I --scenario S1 --range medium --n 30 --replicates 2 "
                        "--seed 21 --iters 400 --burn 100 --output " + (dir / "table.csv"))) == 0);
  const std::string table = slurp(dir / "table.csv");
  CHECK(table.rfind("study,scenario,method,phase,median_abs_error,ci95_width", 0) == 0);
  CHECK(table.find("multimarker,E") != std::string::npos);
  CHECK(table.find("multimarker,I") != std::string::npos);
  CHECK(table.find("blr,E") != std::string::npos);
  CHECK(table.find("pls,I") != std::string::npos);
}

TEST_CASE("loocv produces the per-observation and per-dose summaries") {
  TempDir dir;
  // Tiny dataset: 6 observations across 3 doses.
  {
    std::ofstream out(dir / "tiny.csv");
    out << "y1,y2,dose\n";
    out << "1.1,2.0,50\n1.2,2.1,50\n1.6,2.6,100\n1.7,2.7,100\n3.1,4.2,300\n3.2,4.0,300\n";
  }
  REQUIRE(exit_code(run("loocv --input " + (dir / "tiny.csv") + " --output " + (dir / "loo.csv") +
                        " --summary " + (dir / "loo_sum.csv") +
                        " --seed 4 --iters 300 --burn 100 --no-scale --jobs 2")) == 0);
  const std::string loo = slurp(dir / "loo.csv");
  CHECK(loo.rfind("obs,dose,method,median,ci_low,ci_high,difference,p_comp_1,p_comp_2,p_comp_3", 0) == 0);
  CHECK(std::count(loo.begin(), loo.end(), '\n') == 7);
  const std::string sum = slurp(dir / "loo_sum.csv");
  CHECK(sum.rfind("dose,median_abs_difference", 0) == 0);
  CHECK(std::count(sum.begin(), sum.end(), '\n') == 4);
}

TEST_CASE("loocv runs the comparison regressions through the same folds") {
  TempDir dir;
  {
    std::ofstream out(dir / "tiny.csv");
    out << "y1,y2,dose\n";
    out << "1.1,2.0,50\n1.2,2.1,50\n1.6,2.6,100\n1.7,2.7,100\n3.1,4.2,300\n3.2,4.0,300\n";
  }
  for (const std::string method : {"blr", "pls"}) {
    REQUIRE(exit_code(run("loocv --input " + (dir / "tiny.csv") + " --method " + method +
                          " --output " + (dir / (method + ".csv")) + " --no-scale --seed 3")) == 0);
    const std::string out = slurp(dir / (method + ".csv"));
    CHECK(out.rfind("obs,dose,method,median,ci_low,ci_high,difference", 0) == 0);
    CHECK(out.find("," + method + ",") != std::string::npos);
    CHECK(std::count(out.begin(), out.end(), '\n') == 7);
  }
}

TEST_CASE("diag reports ESS per parameter and tidy traces") {
  TempDir dir;
  REQUIRE(exit_code(run("simulate --study I --n 30 --seed 31 --output-prefix " + (dir / "s"))) == 0);
  REQUIRE(exit_code(run("fit --input " + (dir / "s_train.csv") + " --chain " + (dir / "s.mmc") +
                        " --seed 2 --iters 600 --burn 200 --no-scale")) == 0);
  REQUIRE(exit_code(run("diag --chain " + (dir / "s.mmc") + " --output " + (dir / "ess.csv") +
                        " --traces " + (dir / "tr.csv"))) == 0);
  const std::string ess = slurp(dir / "ess.csv");
  CHECK(ess.rfind("parameter,dimension,ess,degenerate", 0) == 0);
  CHECK(ess.find("alpha,1,") != std::string::npos);
  CHECK(ess.find("theta2,3,") != std::string::npos);
  CHECK(ess.find("z,30,") != std::string::npos);
  const std::string tr = slurp(dir / "tr.csv");
  CHECK(tr.rfind("draw,parameter,dimension,value", 0) == 0);
}

TEST_CASE("unknown inputs produce categorized nonzero exits") {
  TempDir dir;
  // Missing file -> io error (5).
  CHECK(exit_code(run("fit --input " + (dir / "absent.csv") + " --chain " + (dir / "x.mmc"))) == 5);
  // Unknown subcommand -> CLI parse failure (nonzero).
  CHECK(exit_code(run("frobnicate")) != 0);
}
