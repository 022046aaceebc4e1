// End-to-end tests of the CLI binary: output schemas, determinism,
// config-file handling and exit codes.

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

namespace {

struct CmdResult {
  int code;
  std::string out;
};

CmdResult run_cli(const std::string& args) {
  const std::string cmd =
      std::string(CELLCAP_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  size_t got;
  while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) out.append(buf, got);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

std::string first_line(const std::string& s) {
  return s.substr(0, s.find('\n'));
}

}  // namespace

TEST_CASE("analyze emits the documented CSV schema") {
  auto r = run_cli("analyze --d 1 --eta 0.5 --xi 2");
  REQUIRE(r.code == 0);
  CHECK(first_line(r.out) == "d,eta,xi,mu0,mu1,mu2,delta_mu,limit_mode");
  // one header + one data row
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 2);
}

TEST_CASE("analyze sweep emits the requested number of rows") {
  auto r = run_cli("analyze --eta 0 --xi 2 --sweep d --from 0.5 --to 2 --steps 4");
  REQUIRE(r.code == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 5);
  CHECK(r.out.find("\n0.5,") != std::string::npos);
  CHECK(r.out.find("\n2,") != std::string::npos);
}

TEST_CASE("bound emits one row with probabilities and the bound") {
  auto r = run_cli("bound --width 4 --height 1 --sr-block 0 --n 4 --r1 1 --r2 0.5");
  REQUIRE(r.code == 0);
  CHECK(first_line(r.out) ==
        "C,N,A,d,variant,p1,p2,p3,p4,p5,p6,p7,p8,q1,q2,mu,"
        "sr_contribution,non_sr_contribution");
  // C=4, N=4, A=0, R1=1: mu = 49/256 up to rounding in the power terms
  CHECK(r.out.find(",0.1914062") != std::string::npos);
}

TEST_CASE("json format produces an array of objects") {
  auto r = run_cli("--format json analyze --d 1 --eta 0 --xi 2");
  REQUIRE(r.code == 0);
  CHECK(r.out.front() == '[');
  CHECK(r.out.find("\"mu0\"") != std::string::npos);
  CHECK(r.out.find("\"limit_mode\"") != std::string::npos);
}

TEST_CASE("simulate output is byte-identical across runs with one seed") {
  const auto out_a = temp_path("cellcap_sim_a.csv");
  const auto out_b = temp_path("cellcap_sim_b.csv");
  std::filesystem::remove(out_a);
  std::filesystem::remove(out_b);
  const std::string base =
      "simulate --width 3 --height 3 --sr-block 3 --n 6 --r1 2 --r2 1 "
      "--slots 2000";
  auto ra = run_cli("--seed 7 --out " + out_a.string() + " " + base);
  auto rb = run_cli("--seed 7 --out " + out_b.string() + " " + base);
  REQUIRE(ra.code == 0);
  REQUIRE(rb.code == 0);
  CHECK(read_file(out_a) == read_file(out_b));

  auto rc = run_cli("--seed 8 --out " + out_b.string() + " " + base);
  REQUIRE(rc.code == 0);
  CHECK(read_file(out_a) != read_file(out_b));
}

TEST_CASE("simulate emits one row per strategy plus the plug-in bound") {
  auto r = run_cli(
      "simulate --width 2 --height 1 --sr-block 0 --n 2 --r1 2 --r2 1 "
      "--slots 500");
  REQUIRE(r.code == 0);
  CHECK(first_line(r.out) == "strategy,analytic,empirical,stderr,z_score");
  for (const char* name : {"\np1,", "\np8,", "\nq1,", "\nq2,", "\nmu,"})
    CHECK(r.out.find(name) != std::string::npos);
}

TEST_CASE("config file supplies values and flags override it") {
  const auto cfg = temp_path("cellcap_cfg.json");
  {
    std::ofstream out(cfg);
    out << R"({"d": 2.0, "eta": 0.5, "xi": 4.0})";
  }
  auto r = run_cli("--config " + cfg.string() + " analyze");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("\n2,0.5,4,") != std::string::npos);

  auto r2 = run_cli("--config " + cfg.string() + " analyze --eta 0.25");
  REQUIRE(r2.code == 0);
  CHECK(r2.out.find("\n2,0.25,4,") != std::string::npos);
}

TEST_CASE("optimize reports the density optimum with residual") {
  auto r = run_cli("optimize --objective mu1 --d-lo 0.5 --d-hi 5 --tol 1e-10");
  REQUIRE(r.code == 0);
  CHECK(first_line(r.out) ==
        "objective,d_opt,mu_max,stationarity_residual,note");
  CHECK(r.out.find("\nmu1,1.793") != std::string::npos);
  CHECK(r.out.find("0.1942") != std::string::npos);
}

TEST_CASE("invalid model parameters exit 1 without partial output") {
  const auto out = temp_path("cellcap_bad.csv");
  std::filesystem::remove(out);
  auto r = run_cli("--out " + out.string() +
                   " bound --width 2 --height 1 --sr-block 0 --n 3");
  CHECK(r.code == 1);
  CHECK_FALSE(std::filesystem::exists(out));
}

TEST_CASE("unknown flags and missing subcommands exit 1") {
  CHECK(run_cli("analyze --no-such-flag 1").code == 1);
  CHECK(run_cli("").code == 1);
  CHECK(run_cli("analyze --sweep volume --from 0 --to 1 --steps 3").code == 1);
}

TEST_CASE("numerical failures exit 2") {
  // Periodic chain with a non-uniform stationary distribution: the power
  // iteration oscillates forever and the solver must report failure.
  const auto mat = temp_path("cellcap_period.txt");
  {
    std::ofstream out(mat);
    out << "0 0.5 0.5\n1 0 0\n1 0 0\n";
  }
  auto r = run_cli("bound --width 3 --height 1 --sr-block 1 --n 2 --pi " +
                   mat.string());
  CHECK(r.code == 2);
}

TEST_CASE("validate flags the printed formula but not the consistent one") {
  auto r = run_cli("validate --max-cells 3 --max-nodes 4");
  REQUIRE(r.code == 0);
  CHECK(first_line(r.out) ==
        "section,C,N,A,variant,entry,reference,value,abs_diff");
  CHECK(r.out.find("probability,3,") != std::string::npos);
  CHECK(r.out.find("event-consistent,p4") == std::string::npos);
  // summary rows carry the totals
  CHECK(r.out.find("summary,,,,event-consistent,discrepancy_count,0,") !=
        std::string::npos);
}
