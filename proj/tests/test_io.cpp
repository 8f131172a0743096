#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "dada/io.hpp"
#include "dada/models.hpp"

#include <nlohmann/json.hpp>

using namespace dada;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  fs::path dir = fs::temp_directory_path() /
                 ("dada-io-test-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("format_g12 uses %.12g") {
  CHECK(io::format_g12(1.0) == "1");
  CHECK(io::format_g12(0.1) == "0.1");
  CHECK(io::format_g12(1.0 / 3.0) == "0.333333333333");
  CHECK(io::format_g12(-2.5e-17) == "-2.5e-17");
}

TEST_CASE("csv writer/reader round trip with fixed column order") {
  fs::path dir = temp_dir();
  fs::path file = dir / "table.csv";
  {
    io::CsvWriter w(file, {"a", "b", "label"});
    w.cell(1.5).cell(2).cell(std::string("first")); w.end_row();
    w.cell(-0.25).cell(7).cell(std::string("second")); w.end_row();
  }
  io::CsvTable t = io::read_csv(file);
  REQUIRE(t.header.size() == 3);
  CHECK(t.header[0] == "a");
  REQUIRE(t.rows.size() == 2);
  CHECK(t.number(0, t.column("a")) == 1.5);
  CHECK(t.number(1, t.column("b")) == 7.0);
  CHECK(t.rows[1][2] == "second");
  fs::remove_all(dir);
}

TEST_CASE("csv numeric errors name the row and column") {
  fs::path dir = temp_dir();
  fs::path file = dir / "bad.csv";
  {
    std::ofstream out(file);
    out << "t,obs_1\n0,1.25\n1,oops\n";
  }
  io::CsvTable t = io::read_csv(file);
  CHECK(t.number(0, 1) == 1.25);
  try {
    t.number(1, 1);
    FAIL("expected a parse error");
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    CHECK(msg.find("row 2") != std::string::npos);
    CHECK(msg.find("obs_1") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("trajectory and observation files round trip") {
  fs::path dir = temp_dir();
  models::Trajectory traj;
  traj.dt_per_step = 0.01;
  Rng rng(5);
  for (int t = 0; t < 7; ++t)
    traj.states.push_back(Vec3{rng.gaussian(), rng.gaussian(), rng.gaussian()});
  io::write_trajectory_csv(dir / "traj.csv", traj);
  models::Trajectory back = io::read_trajectory_csv(dir / "traj.csv");
  REQUIRE(back.states.size() == traj.states.size());
  CHECK(back.dt_per_step == doctest::Approx(0.01));
  for (std::size_t t = 0; t < traj.states.size(); ++t)
    CHECK((back.states[t] - traj.states[t]).norm() < 1e-11);

  models::ObservationSequence y;
  for (int t = 0; t < 5; ++t)
    y.obs.push_back(Vec3{rng.gaussian(), rng.gaussian(), rng.gaussian()});
  io::write_observations_csv(dir / "obs.csv", y, 0.01);
  models::ObservationSequence yb = io::read_observations_csv(dir / "obs.csv");
  REQUIRE(yb.obs.size() == y.obs.size());
  for (std::size_t t = 0; t < y.obs.size(); ++t)
    CHECK((yb.obs[t] - y.obs[t]).norm() < 1e-11);
  fs::remove_all(dir);
}

TEST_CASE("observation reader rejects files without obs columns") {
  fs::path dir = temp_dir();
  {
    std::ofstream out(dir / "x.csv");
    out << "t,foo\n0,1\n";
  }
  CHECK_THROWS_AS(io::read_observations_csv(dir / "x.csv"), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("checksums are stable and content-sensitive") {
  fs::path dir = temp_dir();
  fs::path f1 = dir / "one.txt";
  {
    std::ofstream out(f1);
    out << "hello";
  }
  std::string c1 = io::file_checksum_hex(f1);
  std::string c2 = io::file_checksum_hex(f1);
  CHECK(c1 == c2);
  CHECK(c1.size() == 16);
  {
    std::ofstream out(f1);
    out << "hellp";
  }
  CHECK(io::file_checksum_hex(f1) != c1);
  fs::remove_all(dir);
}

TEST_CASE("manifest lists outputs with checksums") {
  fs::path dir = temp_dir();
  {
    std::ofstream out(dir / "data.csv");
    out << "a\n1\n";
  }
  io::Manifest m("simulate", 42);
  m.set_config({{"kind", "simulate"}});
  m.add_output(dir / "data.csv");
  m.add_timing("total", 1.25);
  m.add_failure("combo 3: window cap");
  m.set_result("pn", 0.5);
  m.write(dir);

  std::ifstream in(dir / "manifest.json");
  nlohmann::json j = nlohmann::json::parse(in);
  CHECK(j["command"] == "simulate");
  CHECK(j["master_seed"] == 42);
  CHECK(j["outputs"].contains("data.csv"));
  CHECK(j["outputs"]["data.csv"] == io::file_checksum_hex(dir / "data.csv"));
  CHECK(j["failures"].size() == 1);
  CHECK(j["results"]["pn"] == 0.5);
  CHECK(j.contains("version"));
  fs::remove_all(dir);
}
