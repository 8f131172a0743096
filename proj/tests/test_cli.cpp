#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "dada/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

static std::string g_bin = "dada-kit";

namespace {

struct RunResult {
  int code = -1;
  std::string stderr_text;
};

RunResult run_cli(const std::string& args, const fs::path& scratch) {
  fs::path err_file = scratch / "stderr.txt";
  std::string cmd = g_bin + " " + args + " 2>" + err_file.string();
  int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WEXITSTATUS(status);
  std::ifstream in(err_file);
  r.stderr_text.assign(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
  return r;
}

fs::path make_scratch(const std::string& name) {
  fs::path dir = fs::temp_directory_path() /
                 ("dada-cli-" + name + "-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

json simulate_config(int steps, std::uint64_t seed) {
  return json{{"schema_version", 1},
              {"kind", "simulate"},
              {"model",
               {{"lambda", 20.0},
                {"theta_deg", -140.0},
                {"dt", 0.01},
                {"sigma_q", 0.1}}},
              {"sigma_r", 0.5},
              {"steps", steps},
              {"burn_in", 200},
              {"seed", seed}};
}

json attribute_config(double lambda_factual, std::uint64_t seed) {
  json model1 = {{"lambda", lambda_factual},
                 {"theta_deg", -140.0},
                 {"dt", 0.01},
                 {"sigma_q", 0.1}};
  json model0 = {{"lambda", 0.0},
                 {"theta_deg", -140.0},
                 {"dt", 0.01},
                 {"sigma_q", 0.1}};
  return json{{"schema_version", 1},
              {"kind", "attribute"},
              {"factual", model1},
              {"counterfactual", model0},
              {"sigma_r", 0.5},
              {"filter", "enkf"},
              {"ensemble_size", 60},
              {"attractor_samples", 4000},
              {"attractor_stride", 5},
              {"burn_in", 2000},
              {"seed", seed}};
}

}  // namespace

TEST_CASE("simulate: zero steps emits single-row files") {
  fs::path dir = make_scratch("sim0");
  write_file(dir / "cfg.json", simulate_config(0, 7).dump());
  RunResult r = run_cli("simulate --config " + (dir / "cfg.json").string() +
                            " --out " + dir.string(),
                        dir);
  CHECK(r.code == 0);
  dada::io::CsvTable traj = dada::io::read_csv(dir / "trajectory.csv");
  dada::io::CsvTable obs = dada::io::read_csv(dir / "observations.csv");
  CHECK(traj.rows.size() == 1);
  CHECK(obs.rows.size() == 1);
  CHECK(fs::exists(dir / "manifest.json"));
  fs::remove_all(dir);
}

TEST_CASE("simulate: identical config and seed give byte-identical outputs") {
  fs::path a = make_scratch("sim-a");
  fs::path b = make_scratch("sim-b");
  write_file(a / "cfg.json", simulate_config(50, 99).dump());
  write_file(b / "cfg.json", simulate_config(50, 99).dump());
  CHECK(run_cli("simulate --config " + (a / "cfg.json").string() + " --out " +
                    a.string(),
                a)
            .code == 0);
  CHECK(run_cli("simulate --config " + (b / "cfg.json").string() + " --out " +
                    b.string(),
                b)
            .code == 0);
  CHECK(file_bytes(a / "trajectory.csv") == file_bytes(b / "trajectory.csv"));
  CHECK(file_bytes(a / "observations.csv") ==
        file_bytes(b / "observations.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("simulate: a missing dt is reported by name with exit 2") {
  fs::path dir = make_scratch("sim-baddt");
  json cfg = simulate_config(10, 1);
  cfg["model"].erase("dt");
  write_file(dir / "cfg.json", cfg.dump());
  RunResult r = run_cli("simulate --config " + (dir / "cfg.json").string() +
                            " --out " + dir.string(),
                        dir);
  CHECK(r.code == 2);
  CHECK(r.stderr_text.find("dt") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("unknown config keys are rejected") {
  fs::path dir = make_scratch("sim-unknown");
  json cfg = simulate_config(10, 1);
  cfg["tpyo"] = 3;
  write_file(dir / "cfg.json", cfg.dump());
  RunResult r = run_cli("simulate --config " + (dir / "cfg.json").string() +
                            " --out " + dir.string(),
                        dir);
  CHECK(r.code == 2);
  CHECK(r.stderr_text.find("tpyo") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("config kind must match the subcommand") {
  fs::path dir = make_scratch("kind");
  write_file(dir / "cfg.json", simulate_config(10, 1).dump());
  RunResult r = run_cli("attribute --config " + (dir / "cfg.json").string() +
                            " --obs none.csv --out " + dir.string(),
                        dir);
  CHECK(r.code == 2);
  fs::remove_all(dir);
}

TEST_CASE("observe applies a projection operator") {
  fs::path dir = make_scratch("observe");
  write_file(dir / "sim.json", simulate_config(20, 3).dump());
  REQUIRE(run_cli("simulate --config " + (dir / "sim.json").string() +
                      " --out " + dir.string(),
                  dir)
              .code == 0);
  json cfg = {{"schema_version", 1},
              {"kind", "observe"},
              {"sigma_r", 0.0},
              {"h_matrix", {{1.0, 0.0, 0.0}}},
              {"seed", 4}};
  fs::path out = dir / "obs-out";
  write_file(dir / "obs.json", cfg.dump());
  RunResult r = run_cli("observe --config " + (dir / "obs.json").string() +
                            " --trajectory " + (dir / "trajectory.csv").string() +
                            " --out " + out.string(),
                        dir);
  CHECK(r.code == 0);
  dada::io::CsvTable traj = dada::io::read_csv(dir / "trajectory.csv");
  dada::io::CsvTable obs = dada::io::read_csv(out / "observations.csv");
  REQUIRE(obs.rows.size() == traj.rows.size());
  int xcol = traj.column("state_1");
  int ocol = obs.column("obs_1");
  CHECK(obs.column("obs_2") == -1);  // scalar observations
  for (std::size_t i = 0; i < obs.rows.size(); ++i)
    CHECK(obs.number(i, ocol) == doctest::Approx(traj.number(i, xcol)));
  fs::remove_all(dir);
}

TEST_CASE("attribute: identical worlds give PN exactly zero") {
  fs::path dir = make_scratch("attr-null");
  write_file(dir / "sim.json", simulate_config(20, 11).dump());
  REQUIRE(run_cli("simulate --config " + (dir / "sim.json").string() +
                      " --out " + dir.string(),
                  dir)
              .code == 0);
  json cfg = attribute_config(0.0, 12);  // factual lambda = 0 too
  write_file(dir / "att.json", cfg.dump());
  fs::path out = dir / "att-out";
  RunResult r = run_cli("attribute --config " + (dir / "att.json").string() +
                            " --obs " + (dir / "observations.csv").string() +
                            " --out " + out.string(),
                        dir);
  CHECK(r.code == 0);
  std::ifstream in(out / "summary.json");
  json summary = json::parse(in);
  CHECK(summary["pn"].get<double>() == 0.0);
  CHECK(summary["log_evidence_factual"] ==
        summary["log_evidence_counterfactual"]);
  fs::remove_all(dir);
}

TEST_CASE("attribute: factual world wins on factual-generated data") {
  fs::path dir = make_scratch("attr-pos");
  write_file(dir / "sim.json", simulate_config(400, 21).dump());
  REQUIRE(run_cli("simulate --config " + (dir / "sim.json").string() +
                      " --out " + dir.string(),
                  dir)
              .code == 0);
  write_file(dir / "att.json", attribute_config(20.0, 22).dump());
  fs::path out = dir / "att-out";
  RunResult r = run_cli("attribute --config " + (dir / "att.json").string() +
                            " --obs " + (dir / "observations.csv").string() +
                            " --out " + out.string(),
                        dir);
  CHECK(r.code == 0);
  std::ifstream in(out / "summary.json");
  json summary = json::parse(in);
  CHECK(summary["pn"].get<double>() > 0.0);
  // evidence table recombines: last row pn equals the summary pn
  dada::io::CsvTable ev = dada::io::read_csv(out / "evidence.csv");
  CHECK(ev.rows.size() == 401);
  CHECK(ev.number(ev.rows.size() - 1, ev.column("pn")) ==
        doctest::Approx(summary["pn"].get<double>()).epsilon(1e-9));
  fs::remove_all(dir);
}

TEST_CASE("attribute: corrupt observation rows are named with exit 2") {
  fs::path dir = make_scratch("attr-corrupt");
  write_file(dir / "obs.csv", "t,time_days,obs_1,obs_2,obs_3\n"
                              "0,0,1.0,2.0,3.0\n"
                              "1,0.01,1.0,broken,3.0\n");
  write_file(dir / "att.json", attribute_config(20.0, 1).dump());
  RunResult r = run_cli("attribute --config " + (dir / "att.json").string() +
                            " --obs " + (dir / "obs.csv").string() + " --out " +
                            dir.string(),
                        dir);
  CHECK(r.code == 2);
  CHECK(r.stderr_text.find("row 2") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("attribute: dimension mismatch exits 2") {
  fs::path dir = make_scratch("attr-dim");
  write_file(dir / "obs.csv", "t,time_days,obs_1\n0,0,1.0\n1,0.01,0.5\n");
  write_file(dir / "att.json", attribute_config(20.0, 1).dump());
  RunResult r = run_cli("attribute --config " + (dir / "att.json").string() +
                            " --obs " + (dir / "obs.csv").string() + " --out " +
                            dir.string(),
                        dir);
  CHECK(r.code == 2);
  fs::remove_all(dir);
}

namespace {

json sweep_config(std::vector<double> lambdas, std::uint64_t seed) {
  return json{{"schema_version", 1},
              {"kind", "sweep"},
              {"lambda_grid", lambdas},
              {"sigma_q_grid", {0.3}},
              {"sigma_r_grid", {0.5}},
              {"n_directions", 3},
              {"n_eval_sequences", 60},
              {"window_steps", 20},
              {"n_prob_segments", 2000},
              {"ensemble_size", 50},
              {"burn_in", 2000},
              {"attractor_samples", 4000},
              {"attractor_stride", 5},
              {"seed", seed}};
}

}  // namespace

TEST_CASE("sweep emits well-formed tables; roc subcommand agrees") {
  fs::path dir = make_scratch("sweep");
  write_file(dir / "cfg.json", sweep_config({0.0, 24.0}, 31).dump());
  RunResult r = run_cli("sweep --config " + (dir / "cfg.json").string() +
                            " --out " + dir.string() + " --workers 2",
                        dir);
  CHECK(r.code == 0);
  for (const char* name :
       {"scores.csv", "roc_overall.csv", "gini_by_lambda.csv",
        "gini_by_sigmaQ.csv", "gini_by_sigmaR.csv", "gini_by_contrast.csv",
        "manifest.json"})
    CHECK(fs::exists(dir / name));

  dada::io::CsvTable roc = dada::io::read_csv(dir / "roc_overall.csv");
  int fpr = roc.column("fpr"), tpr = roc.column("tpr"),
      method = roc.column("method");
  REQUIRE(fpr >= 0);
  // per-method curves start at (0,0) and end at (1,1)
  std::string prev;
  for (std::size_t i = 0; i < roc.rows.size(); ++i) {
    const std::string& m = roc.rows[i][static_cast<std::size_t>(method)];
    if (m != prev) {
      CHECK(roc.number(i, fpr) == 0.0);
      CHECK(roc.number(i, tpr) == 0.0);
      if (i > 0) {
        CHECK(roc.number(i - 1, fpr) == 1.0);
        CHECK(roc.number(i - 1, tpr) == 1.0);
      }
      prev = m;
    }
  }
  CHECK(roc.number(roc.rows.size() - 1, fpr) == 1.0);
  CHECK(roc.number(roc.rows.size() - 1, tpr) == 1.0);

  dada::io::CsvTable gl = dada::io::read_csv(dir / "gini_by_lambda.csv");
  for (std::size_t i = 0; i < gl.rows.size(); ++i) {
    for (const char* col : {"gini_dada", "gini_conv"}) {
      double g = gl.number(i, gl.column(col));
      CHECK(g >= -1.0);
      CHECK(g <= 1.0);
    }
  }

  // roc subcommand reproduces the sweep's pooled gini
  json roc_cfg = {{"schema_version", 1}, {"kind", "roc"}, {"score", "both"}};
  write_file(dir / "roc.json", roc_cfg.dump());
  fs::path roc_out = dir / "roc-out";
  RunResult rr = run_cli("roc --config " + (dir / "roc.json").string() +
                             " --scores " + (dir / "scores.csv").string() +
                             " --out " + roc_out.string(),
                         dir);
  CHECK(rr.code == 0);
  std::ifstream in(roc_out / "summary.json");
  json summary = json::parse(in);
  std::ifstream min(dir / "manifest.json");
  json manifest = json::parse(min);
  CHECK(summary["dada"]["gini"].get<double>() ==
        doctest::Approx(manifest["results"]["gini_dada"].get<double>())
            .epsilon(1e-12));
  fs::remove_all(dir);
}

TEST_CASE("sweep with only the null world has near-zero gini") {
  fs::path dir = make_scratch("sweep-null");
  write_file(dir / "cfg.json", sweep_config({0.0}, 41).dump());
  RunResult r = run_cli("sweep --config " + (dir / "cfg.json").string() +
                            " --out " + dir.string(),
                        dir);
  CHECK(r.code == 0);
  std::ifstream in(dir / "manifest.json");
  json manifest = json::parse(in);
  CHECK(std::abs(manifest["results"]["gini_dada"].get<double>()) < 0.05);
  CHECK(std::abs(manifest["results"]["gini_conv"].get<double>()) < 0.05);
  fs::remove_all(dir);
}

TEST_CASE("attractor command emits grids and moments") {
  fs::path dir = make_scratch("attractor");
  json cfg = {{"schema_version", 1},
              {"kind", "attractor"},
              {"model",
               {{"lambda", 20.0},
                {"theta_deg", -140.0},
                {"dt", 0.01},
                {"sigma_q", 0.1}}},
              {"n_samples", 4000},
              {"stride", 5},
              {"burn_in", 2000},
              {"grid_nx", 41},
              {"grid_ny", 41},
              {"seed", 51}};
  write_file(dir / "cfg.json", cfg.dump());
  RunResult r = run_cli("attractor --config " + (dir / "cfg.json").string() +
                            " --out " + dir.string(),
                        dir);
  CHECK(r.code == 0);
  dada::io::CsvTable k = dada::io::read_csv(dir / "kde_factual.csv");
  CHECK(k.rows.size() == 41 * 41);
  dada::io::CsvTable d = dada::io::read_csv(dir / "kde_difference.csv");
  bool has_pos = false, has_neg = false;
  int dens = d.column("density");
  for (std::size_t i = 0; i < d.rows.size(); ++i) {
    double v = d.number(i, dens);
    has_pos = has_pos || v > 0.0;
    has_neg = has_neg || v < 0.0;
  }
  CHECK(has_pos);
  CHECK(has_neg);
  std::ifstream in(dir / "moments.json");
  json moments = json::parse(in);
  CHECK(moments["plane"]["first"].size() == 3);
  fs::remove_all(dir);
}

TEST_CASE("demo-ar1 emits tables and is deterministic apart from timings") {
  fs::path dir_a = make_scratch("demo-a");
  fs::path dir_b = make_scratch("demo-b");
  json cfg = {{"schema_version", 1},
              {"kind", "demo_ar1"},
              {"a", 0.9},
              {"noise_std", 1.0},
              {"segment_steps", 20},
              {"target_p", 0.01},
              {"n_grid", {500, 2000}},
              {"timing_steps_grid", {20, 40}},
              {"n_bootstrap", 50},
              {"seed", 61}};
  for (const fs::path& dir : {dir_a, dir_b}) {
    write_file(dir / "cfg.json", cfg.dump());
    RunResult r = run_cli("demo-ar1 --config " + (dir / "cfg.json").string() +
                              " --out " + dir.string(),
                          dir);
    CHECK(r.code == 0);
  }
  for (const char* name :
       {"tail_prob_vs_n.csv", "return_levels.csv", "summary.json"})
    CHECK(file_bytes(dir_a / name) == file_bytes(dir_b / name));
  // timing files exist with the documented columns
  dada::io::CsvTable t = dada::io::read_csv(dir_a / "timing.csv");
  CHECK(t.column("conventional_seconds") >= 0);
  CHECK(t.column("dada_seconds") >= 0);
  CHECK(t.rows.size() == 2);
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("seed flag overrides the config seed") {
  fs::path a = make_scratch("seedflag-a");
  fs::path b = make_scratch("seedflag-b");
  write_file(a / "cfg.json", simulate_config(30, 1).dump());
  write_file(b / "cfg.json", simulate_config(30, 2).dump());
  CHECK(run_cli("simulate --config " + (a / "cfg.json").string() +
                    " --seed 123 --out " + a.string(),
                a)
            .code == 0);
  CHECK(run_cli("simulate --config " + (b / "cfg.json").string() +
                    " --seed 123 --out " + b.string(),
                b)
            .code == 0);
  CHECK(file_bytes(a / "trajectory.csv") == file_bytes(b / "trajectory.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

int main(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--bin") g_bin = argv[i + 1];
  if (const char* env = std::getenv("DADA_KIT_BIN")) g_bin = env;
  doctest::Context ctx;
  ctx.applyCommandLine(argc, argv);
  return ctx.run();
}
