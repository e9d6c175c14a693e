#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "shelterq/desim.hpp"
#include "shelterq/thresholds.hpp"

namespace fs = std::filesystem;
using namespace shelterq;

namespace {

struct RunResult {
  int exitCode = -1;
  std::string output;  // stdout and stderr interleaved
};

RunResult run_cli(const std::string& args) {
  std::string cmd = std::string(SHELTERQ_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult r;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) {
    r.output.append(buf, n);
  }
  int status = pclose(pipe);
  r.exitCode = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

// Fresh scratch directory per process run.
fs::path scratch_dir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() /
                 ("shelterq_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string write_scenario(const std::string& name, const std::string& text) {
  fs::path p = scratch_dir() / name;
  std::ofstream out(p);
  out << text;
  out.close();
  return p.string();
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Console output minus the "wrote <path>" lines, whose paths differ per run.
std::string without_paths(const std::string& text) {
  std::istringstream in(text);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("wrote ", 0) != 0) out << line << '\n';
  }
  return out.str();
}

const char* kTinyScenario =
    "[system]\n"
    "lambda = 3.0\nmu = 1.0\ntheta = 1.0\n"
    "[population]\nmode = rates\nrates = 1.0, 2.0\n"
    "[capacity]\nbeds = 2\n"
    "[policy]\nmode = explicit\nthresholds = 0,1\n"
    "[simulation]\nhorizonDays = 80\nreplications = 4\nbaseSeed = 5\n";

}  // namespace

TEST_CASE("analyze prints the exact single-bed figures") {
  RunResult r = run_cli("analyze --lambda 1 --mu 1 --theta 1 --beds 1");
  CHECK(r.exitCode == 0);
  // P{abandon} = 1/e and P{abandon | wait} = 1/(e-1) for this corner system.
  CHECK(r.output.find("p_abandon = 0.3678794412") != std::string::npos);
  CHECK(r.output.find("p_abandon_given_wait = 0.5819767069") != std::string::npos);
  CHECK(r.output.find("p_wait = 0.6321205588") != std::string::npos);
  CHECK(r.output.find("occupancy") != std::string::npos);
}

TEST_CASE("analyze renders csv on request") {
  RunResult r = run_cli("analyze --lambda 4.44 --mu 0.016 --theta 0.5 --beds 270 --format csv");
  CHECK(r.exitCode == 0);
  CHECK(r.output.rfind("lambda,mu,theta,beds,p_wait,", 0) == 0);
  CHECK(r.output.find("mean_busy_servers") != std::string::npos);
  CHECK(r.output.find("\n4.44,0.016,0.5,270,") != std::string::npos);
}

TEST_CASE("staff applies each sizing rule") {
  RunResult ed = run_cli("staff --lambda 4.44 --mu 0.016 --theta 0.5 --regime ed --gamma 0.1");
  CHECK(ed.exitCode == 0);
  CHECK(ed.output.find("beds = 250") != std::string::npos);

  RunResult qd = run_cli("staff --lambda 4.44 --mu 0.016 --theta 0.5 --regime qd --gamma 0.1");
  CHECK(qd.output.find("beds = 306") != std::string::npos);

  RunResult qed = run_cli("staff --lambda 4.44 --mu 0.016 --theta 0.5 --regime qed --target 0.05");
  CHECK(qed.exitCode == 0);
  CHECK(qed.output.find("beds = ") != std::string::npos);
  CHECK(qed.output.find("beta_star = ") != std::string::npos);
}

TEST_CASE("invalid inputs exit with the validation code and a tagged message") {
  RunResult r = run_cli("analyze --lambda -1 --mu 1 --theta 1 --beds 5");
  CHECK(r.exitCode == 2);
  CHECK(r.output.find("error[") != std::string::npos);

  // Unstable without abandonment.
  RunResult u = run_cli("analyze --lambda 10 --mu 1 --theta 0 --beds 5");
  CHECK(u.exitCode == 2);
  CHECK(u.output.find("error[") != std::string::npos);

  // Unknown flags are a usage error (CLI11's own exit path).
  RunResult f = run_cli("analyze --nope 3");
  CHECK(f.exitCode != 0);
}

TEST_CASE("missing scenario files are reported, not crashed on") {
  RunResult r = run_cli("simulate --scenario /does/not/exist.ini");
  CHECK(r.exitCode == 2);
  CHECK(r.output.find("error[") != std::string::npos);
}

TEST_CASE("simulate writes per-replication and summary files") {
  std::string ini = write_scenario("tiny.ini", kTinyScenario);
  fs::path out = scratch_dir() / "runA";
  RunResult r = run_cli("simulate --scenario " + ini + " --out-dir " + out.string());
  CHECK(r.exitCode == 0);
  CHECK(r.output.find("scenario = base") != std::string::npos);
  CHECK(r.output.find("abandonment_proportion") != std::string::npos);

  std::string repsCsv = read_file(out / "replications_base.csv");
  CHECK(repsCsv.find("replication,") != std::string::npos);
  std::string summaryCsv = read_file(out / "summary_base.csv");
  // The summary opens with a commented description of the exact configuration.
  CHECK(summaryCsv.rfind("# scenario = base", 0) == 0);
  CHECK(summaryCsv.find("scenario,metric,mean,sd,ci95,n") != std::string::npos);
  CHECK(summaryCsv.find("base,abandonment_proportion,") != std::string::npos);
}

TEST_CASE("simulation output is byte-identical across identical invocations") {
  std::string ini = write_scenario("tiny.ini", kTinyScenario);
  fs::path outA = scratch_dir() / "detA";
  fs::path outB = scratch_dir() / "detB";
  RunResult ra = run_cli("simulate --scenario " + ini + " --out-dir " + outA.string());
  RunResult rb = run_cli("simulate --scenario " + ini + " --out-dir " + outB.string());
  CHECK(ra.exitCode == 0);
  CHECK(rb.exitCode == 0);
  CHECK(without_paths(ra.output) == without_paths(rb.output));
  CHECK(read_file(outA / "replications_base.csv") ==
        read_file(outB / "replications_base.csv"));
  CHECK(read_file(outA / "summary_base.csv") == read_file(outB / "summary_base.csv"));

  // A different seed produces different replication rows.
  fs::path outC = scratch_dir() / "detC";
  RunResult rc = run_cli("simulate --scenario " + ini + " --seed 6 --out-dir " +
                         outC.string());
  CHECK(rc.exitCode == 0);
  CHECK(read_file(outA / "replications_base.csv") !=
        read_file(outC / "replications_base.csv"));
}

TEST_CASE("simulate can trace a replication and the trace verifies") {
  std::string ini = write_scenario("tiny.ini", kTinyScenario);
  fs::path out = scratch_dir() / "traced";
  RunResult r = run_cli("simulate --scenario " + ini + " --trace --out-dir " +
                        out.string());
  CHECK(r.exitCode == 0);

  std::string tsv = read_file(out / "trace_base.tsv");
  int classes = 0;
  std::vector<TraceRow> rows = trace_from_tsv(tsv, &classes);
  CHECK(classes == 2);
  CHECK(!rows.empty());
  ThresholdPolicy policy;
  policy.K = {0, 1};
  CHECK(verify_threshold_trace(rows, policy, 2, 0) == std::nullopt);
}

TEST_CASE("multi-variant runs emit a comparison table") {
  std::string ini = write_scenario(
      "pair.ini", std::string(kTinyScenario) +
                      "[variant open]\npolicy.thresholds = 0,0\n"
                      "[variant guarded]\npolicy.thresholds = 0,1\n");
  fs::path out = scratch_dir() / "pair";
  RunResult r = run_cli("simulate --scenario " + ini + " --out-dir " + out.string());
  CHECK(r.exitCode == 0);
  std::string cmp = read_file(out / "comparison.csv");
  CHECK(cmp.rfind("metric,open_mean,open_ci95,guarded_mean,guarded_ci95\n", 0) == 0);
  CHECK(read_file(out / "summary_open.csv").find("open,") != std::string::npos);
  CHECK(read_file(out / "summary_guarded.csv").find("guarded,") !=
        std::string::npos);
}

TEST_CASE("the thresholds subcommand reports analytic policies") {
  std::string ini = write_scenario(
      "thr.ini",
      "[system]\nlambda = 4.44\nmu = 0.016\ntheta = 0.5\n"
      "[capacity]\nbeds = 270\n"
      "[policy]\nmode = explicit\nthresholds = 0,0,0,0,0,0\n"
      "[qos]\nwaitCaps = 0.05:1, 0.08:1, 0.05:2, 0.10:2, 0.15:2\n");
  RunResult r = run_cli("thresholds --scenario " + ini + " --mode analytic");
  CHECK(r.exitCode == 0);
  CHECK(r.output.find("thresholds = 0,0,0,0,0,50") != std::string::npos);

  RunResult csv = run_cli("thresholds --scenario " + ini + " --mode analytic --format csv");
  CHECK(csv.exitCode == 0);
  CHECK(csv.output.find("scenario,class,threshold,delay_probability") !=
        std::string::npos);
}

TEST_CASE("the thresholds subcommand can target a single variant") {
  std::string scenario = std::string(SHELTERQ_SOURCE_DIR) + "/scenarios/baseline.ini";
  RunResult r = run_cli("thresholds --scenario " + scenario +
                        " --mode analytic --variant reserve");
  CHECK(r.exitCode == 0);
  CHECK(r.output.find("scenario = reserve") != std::string::npos);
  CHECK(r.output.find("scenario = current") == std::string::npos);

  RunResult bad = run_cli("thresholds --scenario " + scenario +
                          " --mode analytic --variant nosuch");
  CHECK(bad.exitCode == 2);
  CHECK(bad.output.find("error[bad-variant]") != std::string::npos);
}

TEST_CASE("infeasible calibration targets exit with the infeasibility code") {
  std::string ini = write_scenario(
      "hard.ini",
      std::string("[system]\nlambda = 3.0\nmu = 1.0\ntheta = 1.0\n"
                  "[population]\nmode = rates\nrates = 2.0, 1.0\n"
                  "[capacity]\nbeds = 2\n"
                  "[policy]\nmode = calibrate\nmaxK = 2\ncalibrationReps = 4\n"
                  "[simulation]\nhorizonDays = 60\nreplications = 4\nbaseSeed = 5\n"
                  "[qos]\nabandonCaps = 0.0001\n"));
  RunResult r = run_cli("thresholds --scenario " + ini + " --mode calibrate");
  CHECK(r.exitCode == 3);
  CHECK(r.output.find("error[infeasible") != std::string::npos);
}

TEST_CASE("sweep writes one grid file per parameter") {
  std::string ini = write_scenario("tiny.ini", kTinyScenario);
  fs::path out = scratch_dir() / "sweep";
  RunResult r = run_cli("sweep --scenario " + ini +
                        " --param lambda --values 2.0,3.0 --out-dir " + out.string());
  CHECK(r.exitCode == 0);
  std::string csv = read_file(out / "sweep_lambda.csv");
  CHECK(csv.rfind("# scenario = base", 0) == 0);
  CHECK(csv.find("param,value,metric,mean,sd,ci95,n\n") != std::string::npos);
  CHECK(csv.find("lambda,2,") != std::string::npos);
  CHECK(csv.find("lambda,3,") != std::string::npos);

  RunResult bad = run_cli("sweep --scenario " + ini + " --param beds --values 1,2");
  CHECK(bad.exitCode != 0);
}
