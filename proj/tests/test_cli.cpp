#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rlqaoa/config.hpp"

using namespace rlqaoa;
namespace fs = std::filesystem;

namespace {

struct CmdResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

// Fresh scratch directory per test case; left behind for post-mortems.
fs::path scratch(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("rlqaoa_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

CmdResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path out_f = dir / "stdout.txt", err_f = dir / "stderr.txt";
  const std::string cmd = std::string(RLQAOA_CLI_PATH) + " " + args + " > " +
                          out_f.string() + " 2> " + err_f.string();
  int rc = std::system(cmd.c_str());
  CmdResult res;
  res.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  res.out = slurp(out_f);
  res.err = slurp(err_f);
  return res;
}

// Keeps every spawned run at toy scale.
const std::string kTiny =
    "--override system.n_sites=2 --override system.q=4"
    " --override training.total_iters=4 --override training.batch_size=8"
    " --override training.d_h=8 --override training.n_hidden=1"
    " --override training.qaoa_restarts=2";

}  // namespace

TEST_CASE("train writes the artifact set and an exact config echo") {
  const fs::path dir = scratch("train");
  const fs::path run = dir / "run";
  CmdResult r = run_cli("train --out " + run.string() + " --seed 5 " + kTiny +
                            " --override system.h_z=0.31",
                        dir);
  INFO("stderr: " << r.err);
  REQUIRE(r.exit_code == 0);

  for (const char* name :
       {"config.ini", "train_log.csv", "summary.json", "checkpoint_best"})
    CHECK(fs::exists(run / name));

  ExperimentConfig echoed = load_config_file((run / "config.ini").string());
  CHECK(echoed.seed == 5);
  CHECK(echoed.n_sites == 2);
  CHECK(echoed.q == 4);
  CHECK(echoed.h_z == 0.31);
  CHECK(echoed.hp.total_iters == 4);
  CHECK(echoed.out_dir == run.string());

  std::ifstream sf(run / "summary.json");
  auto summary = nlohmann::json::parse(sf);
  CHECK(summary["schema_version"] == kSchemaVersion);
  CHECK(summary["algorithm"] == "rl_qaoa");
  CHECK(summary["seed"] == 5);
  CHECK(summary["best_clean_ratio"].is_number());
  CHECK(summary["best_protocol"].size() == 4);
  for (const auto& step : summary["best_protocol"]) {
    CHECK(step["duration"].get<double>() > 0.0);
    CHECK(step.contains("label"));
  }
  CHECK(summary["git_hash"].get<std::string>().size() > 0);
  // The embedded config echo parses back to exactly the file next to it.
  ExperimentConfig embedded =
      parse_config_string(summary["config"].get<std::string>());
  CHECK(embedded == echoed);

  std::istringstream log(slurp(run / "train_log.csv"));
  std::string line;
  std::getline(log, line);
  CHECK(line ==
        "algorithm,iter,lr,temp,mean_clean_ratio,max_clean_ratio,"
        "best_clean_ratio,mean_noisy_return,discrete_entropy,kl,greedy_ratio");
  int rows = 0;
  while (std::getline(log, line))
    if (!line.empty()) {
      CHECK(line.rfind("rl_qaoa,", 0) == 0);
      ++rows;
    }
  CHECK(rows == 4);
}

TEST_CASE("matched seeds give byte-identical logs, changed seeds do not") {
  const fs::path dir = scratch("determinism");
  CmdResult a =
      run_cli("train --out " + (dir / "a").string() + " --seed 9 " + kTiny, dir);
  CmdResult b =
      run_cli("train --out " + (dir / "b").string() + " --seed 9 " + kTiny, dir);
  CmdResult c =
      run_cli("train --out " + (dir / "c").string() + " --seed 10 " + kTiny, dir);
  REQUIRE(a.exit_code == 0);
  REQUIRE(b.exit_code == 0);
  REQUIRE(c.exit_code == 0);
  const std::string log_a = slurp(dir / "a" / "train_log.csv");
  CHECK(log_a == slurp(dir / "b" / "train_log.csv"));
  CHECK(log_a != slurp(dir / "c" / "train_log.csv"));
  CHECK(!log_a.empty());
}

TEST_CASE("config problems exit 1 and name the offence") {
  const fs::path dir = scratch("config_errors");
  {
    std::ofstream f(dir / "bad.ini");
    f << "[run]\nbogus = 3\n";
  }
  CmdResult r = run_cli("train --config " + (dir / "bad.ini").string(), dir);
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("bad.ini:2") != std::string::npos);
  CHECK(r.err.find("unknown key 'bogus'") != std::string::npos);

  r = run_cli("train --override training.lr=zap", dir);
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("training.lr=zap") != std::string::npos);

  r = run_cli("train --override nonsense", dir);
  CHECK(r.exit_code == 1);

  r = run_cli("evaluate --override run.algorithm=qaoa", dir);
  CHECK(r.exit_code == 1);

  // Missing checkpoint is a run failure, not a config error.
  r = run_cli("evaluate --out " + (dir / "void").string(), dir);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("checkpoint") != std::string::npos);
}

TEST_CASE("sweep covers the cross product and resumes without duplicates") {
  const fs::path dir = scratch("sweep");
  const fs::path out = dir / "sw";
  const std::string args =
      "sweep --out " + out.string() + " --workers 2 " + kTiny +
      " --override sweep.algorithms=qaoa,pg_qaoa"
      " --override sweep.noise_strengths=0,0.3"
      " --override sweep.seeds=1,2";
  CmdResult r = run_cli(args, dir);
  INFO("stderr: " << r.err);
  REQUIRE(r.exit_code == 0);

  auto read_rows = [&] {
    std::istringstream csv(slurp(out / "results.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line ==
          "schema_version,algorithm,n_sites,total_T,noise_kind,"
          "noise_strength,seed,status,best_clean_ratio");
    std::vector<std::string> rows;
    while (std::getline(csv, line))
      if (!line.empty()) rows.push_back(line);
    return rows;
  };
  const std::vector<std::string> first = read_rows();
  CHECK(first.size() == 8);  // 2 algorithms x 2 strengths x 2 seeds
  for (const std::string& row : first) {
    CHECK(row.rfind("1,", 0) == 0);
    CHECK(row.find(",ok,") != std::string::npos);
  }

  // Knock out one cell; the rerun recomputes just it, bit-identically.
  REQUIRE(fs::remove(out / "cells" / "qaoa_N4_T10_classical_g0.3_s2" /
                     "summary.json"));
  r = run_cli(args, dir);
  REQUIRE(r.exit_code == 0);
  CHECK(read_rows() == first);
}

TEST_CASE("evaluate reproduces the summary ratio from the checkpoint") {
  const fs::path dir = scratch("evaluate");
  const fs::path run = dir / "run";
  const std::string shared = "--out " + run.string() + " --seed 2 " + kTiny;
  REQUIRE(run_cli("train " + shared, dir).exit_code == 0);
  std::ifstream sf(run / "summary.json");
  auto summary = nlohmann::json::parse(sf);

  CmdResult r = run_cli("evaluate " + shared, dir);
  REQUIRE(r.exit_code == 0);
  auto metrics = nlohmann::json::parse(r.out);
  CHECK(metrics["greedy_clean_ratio"].get<double>() ==
        summary["best_clean_ratio"].get<double>());
  CHECK(metrics["greedy_protocol"] == summary["best_protocol"]);
  CHECK(metrics["checkpoint_iteration"].get<long>() == 4);
}

TEST_CASE("adiabatic-scan emits three rows per duration") {
  const fs::path dir = scratch("scan");
  const fs::path out = dir / "scan";
  CmdResult r = run_cli("adiabatic-scan --out " + out.string() + " --seed 1 " +
                            kTiny + " --override sweep.total_t=2,10",
                        dir);
  INFO("stderr: " << r.err);
  REQUIRE(r.exit_code == 0);
  std::istringstream csv(slurp(out / "adiabatic_scan.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "schema_version,total_T,algorithm,clean_ratio");
  std::vector<std::string> rows;
  while (std::getline(csv, line))
    if (!line.empty()) rows.push_back(line);
  REQUIRE(rows.size() == 6);
  CHECK(rows[0].rfind("1,2,adiabatic,", 0) == 0);
  CHECK(rows[1].rfind("1,2,qaoa,", 0) == 0);
  CHECK(rows[2].rfind("1,2,cd_qaoa,", 0) == 0);
  CHECK(rows[3].rfind("1,10,adiabatic,", 0) == 0);
}

TEST_CASE("verify exits clean on a healthy build and 3 on a planted fault") {
  const fs::path dir = scratch("verify");
  CmdResult r = run_cli("verify", dir);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("all checks passed") != std::string::npos);

  r = run_cli("verify --inject-mask-fault", dir);
  CHECK(r.exit_code == 3);
  CHECK(r.out.find("VERIFICATION FAILED") != std::string::npos);
  CHECK(r.out.find("causality") != std::string::npos);
  CHECK(r.out.find("FAIL") != std::string::npos);
}
