#include <doctest.h>

#include <string>

#include "rlqaoa/config.hpp"

using namespace rlqaoa;

namespace {

// Asserts that parsing `text` throws a ConfigError whose message contains
// every needle (used for line numbers and offending names).
void expect_parse_error(const std::string& text,
                        const std::vector<std::string>& needles) {
  try {
    parse_config_string(text, "conf.ini");
    FAIL("expected ConfigError for:\n" << text);
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    for (const std::string& needle : needles) {
      INFO("message: " << msg);
      CHECK(msg.find(needle) != std::string::npos);
    }
  }
}

void expect_validate_error(const ExperimentConfig& cfg,
                           const std::string& needle) {
  try {
    validate_config(cfg);
    FAIL("expected ConfigError containing '" << needle << "'");
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    INFO("message: " << msg);
    CHECK(msg.find(needle) != std::string::npos);
  }
}

}  // namespace

TEST_CASE("defaults carry the published experiment settings") {
  ExperimentConfig cfg;
  CHECK(cfg.algorithm == "rl_qaoa");
  CHECK(cfg.n_sites == 4);
  CHECK(cfg.coupling == 1.0);
  CHECK(cfg.h_z == 0.4523);
  CHECK(cfg.h_x == 0.4045);
  CHECK(cfg.total_T == 10.0);
  CHECK(cfg.q == 8);
  CHECK(cfg.action_labels ==
        std::vector<std::string>{"H1", "H2", "Y", "X|Y", "Y|Z"});
  CHECK(cfg.noise_kind == "none");
  CHECK(cfg.hp.batch_size == 128);
  CHECK(cfg.hp.lr == 5e-4);
  CHECK(cfg.hp.lr_decay == 0.98);
  CHECK(cfg.hp.lr_decay_every == 50);
  CHECK(cfg.hp.eps_c == 0.1);
  CHECK(cfg.hp.eps_d == 0.001);
  CHECK(cfg.hp.ppo_epochs == 4);
  CHECK(cfg.hp.ema == 0.95);
  CHECK(cfg.hp.entropy_temp == 0.1);
  CHECK(cfg.hp.temp_decay == 0.99);
  CHECK(cfg.hp.total_iters == 5000);
  CHECK(cfg.d_h == 100);
  CHECK(cfg.n_hidden == 2);
  CHECK(cfg.family == "sigmoid_gaussian");
  CHECK(cfg.qaoa_restarts == 10);
  CHECK_NOTHROW(validate_config(cfg));
}

TEST_CASE("serialize/parse round trip preserves every field") {
  SUBCASE("defaults") {
    ExperimentConfig cfg;
    ExperimentConfig back = parse_config_string(serialize_config(cfg));
    CHECK(back == cfg);
  }
  SUBCASE("fully mutated config") {
    ExperimentConfig cfg;
    cfg.algorithm = "qaoa";
    cfg.seed = 18446744073709551615ull;
    cfg.out_dir = "runs/a b/c";
    cfg.workers = 7;
    cfg.n_sites = 6;
    cfg.coupling = -1.25;
    cfg.h_z = 0.1 + 0.2;  // 0.30000000000000004, exercises exact printing
    cfg.h_x = 1e-17;
    cfg.total_T = 12.75;
    cfg.q = 3;
    cfg.action_labels = {"H2", "Y|Z"};
    cfg.noise_kind = "classical";
    cfg.noise_strength = 0.3;
    cfg.hp.batch_size = 64;
    cfg.hp.lr = 1.0 / 3.0;
    cfg.hp.lr_decay = 0.5;
    cfg.hp.lr_decay_every = 7;
    cfg.hp.eps_c = 0.2;
    cfg.hp.eps_d = 0.01;
    cfg.hp.ppo_epochs = 2;
    cfg.hp.ema = 0.5;
    cfg.hp.entropy_temp = 0.25;
    cfg.hp.temp_decay = 0.9;
    cfg.hp.temp_decay_every = 11;
    cfg.hp.total_iters = 123;
    cfg.hp.grad_clip = 2.5;
    cfg.d_h = 17;
    cfg.n_hidden = 1;
    cfg.family = "beta";
    cfg.qaoa_restarts = 4;
    cfg.eval_restarts = 2;
    cfg.inner_line_searches = 12;
    cfg.dt = 5e-4;
    cfg.sweep.algorithms = {"adiabatic"};
    cfg.sweep.n_sites = {4, 6, 8};
    cfg.sweep.total_T = {2, 5, 10, 20, 50};
    cfg.sweep.noise_kinds = {"none", "quantum"};
    cfg.sweep.noise_strengths = {};  // empty list round-trips too
    cfg.sweep.seeds = {1, 2, 18446744073709551615ull};
    ExperimentConfig back = parse_config_string(serialize_config(cfg));
    CHECK(back == cfg);
  }
}

TEST_CASE("parse accepts comments, blank lines and loose spacing") {
  const std::string text =
      "# experiment\n"
      "\n"
      "[run]\n"
      "; a comment\n"
      "  seed   =   42  \n"
      "[system]\n"
      "n_sites = 6\n"
      "actions = H1 , H2 ,Y\n";
  ExperimentConfig cfg = parse_config_string(text);
  CHECK(cfg.seed == 42);
  CHECK(cfg.n_sites == 6);
  CHECK(cfg.action_labels == std::vector<std::string>{"H1", "H2", "Y"});
  CHECK(cfg.q == 8);  // untouched fields keep defaults
}

TEST_CASE("parse errors carry the file, line and offending name") {
  expect_parse_error("[system]\nbogus = 3\n",
                     {"conf.ini:2:", "unknown key 'bogus'", "[system]"});
  expect_parse_error("[cooking]\n", {"conf.ini:1:", "unknown section"});
  expect_parse_error("[system\n", {"conf.ini:1:", "malformed section"});
  expect_parse_error("[system]\nn_sites 4\n",
                     {"conf.ini:2:", "expected 'key = value'"});
  expect_parse_error("seed = 1\n", {"conf.ini:1:", "before any section"});
  expect_parse_error("[run]\nseed = 1\nseed = 2\n",
                     {"conf.ini:3:", "duplicate key 'seed'"});
  expect_parse_error("[system]\nq = five\n",
                     {"conf.ini:2:", "expected an integer", "'q'"});
  expect_parse_error("[system]\nq = 99999999999999999999\n",
                     {"conf.ini:2:", "expected an integer"});
  expect_parse_error("[training]\nlr = fast\n",
                     {"conf.ini:2:", "expected a real number", "'lr'"});
  expect_parse_error("[run]\nseed = -3\n",
                     {"conf.ini:2:", "expected an unsigned integer"});
  expect_parse_error("[system]\nactions = H1,,Y\n",
                     {"conf.ini:2:", "empty list element"});
}

TEST_CASE("overrides hit qualified and unique bare keys") {
  ExperimentConfig cfg;
  apply_override(cfg, "training.lr=0.25");
  CHECK(cfg.hp.lr == 0.25);
  apply_override(cfg, "seed=42");
  CHECK(cfg.seed == 42);
  apply_override(cfg, "sweep.total_t=1,2");
  CHECK(cfg.sweep.total_T == std::vector<double>{1.0, 2.0});

  CHECK_THROWS_AS(apply_override(cfg, "nonsense"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "nope=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "training.lr=abc"), ConfigError);
  try {
    apply_override(cfg, "total_t=3");
    FAIL("ambiguous override must throw");
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    CHECK(msg.find("ambiguous") != std::string::npos);
    CHECK(msg.find("system.total_t") != std::string::npos);
    CHECK(msg.find("sweep.total_t") != std::string::npos);
  }
}

TEST_CASE("validation rejects out-of-range and unknown values") {
  auto mutated = [](auto&& change) {
    ExperimentConfig cfg;
    change(cfg);
    return cfg;
  };
  expect_validate_error(
      mutated([](ExperimentConfig& c) { c.algorithm = "sgd"; }),
      "unknown algorithm 'sgd'");
  expect_validate_error(mutated([](ExperimentConfig& c) { c.n_sites = 1; }),
                        "n_sites");
  expect_validate_error(mutated([](ExperimentConfig& c) { c.n_sites = 15; }),
                        "n_sites");
  expect_validate_error(mutated([](ExperimentConfig& c) { c.q = 0; }), "q");
  expect_validate_error(mutated([](ExperimentConfig& c) { c.total_T = 0; }),
                        "total_t");
  expect_validate_error(mutated([](ExperimentConfig& c) { c.dt = 0; }), "dt");
  expect_validate_error(
      mutated([](ExperimentConfig& c) { c.action_labels = {"H1", "Z"}; }),
      "unknown action label 'Z'");
  expect_validate_error(
      mutated([](ExperimentConfig& c) { c.action_labels.clear(); }),
      "non-empty");
  expect_validate_error(
      mutated([](ExperimentConfig& c) { c.noise_kind = "loud"; }),
      "unknown noise kind 'loud'");
  expect_validate_error(
      mutated([](ExperimentConfig& c) { c.noise_strength = -0.1; }),
      "strength");
  expect_validate_error(mutated([](ExperimentConfig& c) { c.family = "g"; }),
                        "unknown continuous family");
  expect_validate_error(mutated([](ExperimentConfig& c) { c.d_h = 0; }),
                        "d_h");
  expect_validate_error(mutated([](ExperimentConfig& c) { c.workers = -1; }),
                        "workers");
  expect_validate_error(mutated([](ExperimentConfig& c) { c.hp.eps_c = -1; }),
                        "clip radii");
  expect_validate_error(
      mutated([](ExperimentConfig& c) { c.sweep.algorithms = {"x"}; }),
      "unknown sweep algorithm 'x'");
  expect_validate_error(
      mutated([](ExperimentConfig& c) { c.sweep.noise_strengths = {-1}; }),
      "sweep noise strengths");
}

TEST_CASE("noise kind and family names map to enums and back") {
  for (NoiseKind kind :
       {NoiseKind::none, NoiseKind::classical_gaussian, NoiseKind::quantum,
        NoiseKind::gate_rotation})
    CHECK(parse_noise_kind(noise_kind_name(kind)) == kind);
  for (ContinuousFamily family :
       {ContinuousFamily::sigmoid_gaussian, ContinuousFamily::beta})
    CHECK(parse_family(family_name(family)) == family);
  CHECK_THROWS_AS(parse_noise_kind("fuzzy"), ConfigError);
  CHECK_THROWS_AS(parse_family("cauchy"), ConfigError);
}

TEST_CASE("make_env_config maps the experiment fields") {
  ExperimentConfig cfg;
  cfg.n_sites = 6;
  cfg.coupling = 2.0;
  cfg.h_z = 0.1;
  cfg.h_x = 0.2;
  cfg.total_T = 4.5;
  cfg.q = 5;
  cfg.action_labels = {"H1", "H2", "Y"};
  cfg.noise_kind = "classical";
  cfg.noise_strength = 0.3;
  EnvConfig env = make_env_config(cfg);
  CHECK(env.ising.n_sites == 6);
  CHECK(env.ising.coupling == 2.0);
  CHECK(env.ising.h_z == 0.1);
  CHECK(env.ising.h_x == 0.2);
  CHECK(env.total_T == 4.5);
  CHECK(env.q == 5);
  CHECK(env.action_labels == std::vector<std::string>{"H1", "H2", "Y"});
  CHECK(env.noise.kind == NoiseKind::classical_gaussian);
  CHECK(env.noise.strength == 0.3);
}

TEST_CASE("desk-scale hyperparams only extend the iteration budget") {
  PPOHyperparams desk = default_training_hyperparams();
  PPOHyperparams lib;
  CHECK(desk.total_iters == 5000);
  desk.total_iters = lib.total_iters;
  CHECK(desk == lib);
}
