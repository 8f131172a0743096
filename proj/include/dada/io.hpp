#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dada/models.hpp"
#include "dada/types.hpp"

namespace dada::io {

// Fixed numeric formatting for all tabular output: %.12g.
std::string format_g12(double v);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path,
            const std::vector<std::string>& header);
  ~CsvWriter();

  CsvWriter& cell(double v);
  CsvWriter& cell(int v);
  CsvWriter& cell(long v);
  CsvWriter& cell(const std::string& v);
  void end_row();

 private:
  std::ofstream out_;
  std::filesystem::path path_;
  std::size_t n_cols_ = 0;
  std::vector<std::string> row_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
  double number(std::size_t row, int col) const;
};

CsvTable read_csv(const std::filesystem::path& path);

void write_trajectory_csv(const std::filesystem::path& path,
                          const models::Trajectory& traj);
void write_observations_csv(const std::filesystem::path& path,
                            const models::ObservationSequence& y,
                            double dt_per_step);
models::Trajectory read_trajectory_csv(const std::filesystem::path& path);
models::ObservationSequence read_observations_csv(
    const std::filesystem::path& path);

// FNV-1a 64 over the file bytes, as a 16-digit hex string.
std::string file_checksum_hex(const std::filesystem::path& path);

// Run manifest: config snapshot, master seed, version tag, per-output
// checksums and wall-clock timings. Written as manifest.json.
class Manifest {
 public:
  Manifest(std::string command, std::uint64_t master_seed);
  ~Manifest();

  void set_config(const nlohmann::json& snapshot);
  void add_output(const std::filesystem::path& file);
  void add_timing(const std::string& name, double seconds);
  void add_failure(const std::string& message);
  void set_result(const std::string& key, const nlohmann::json& value);
  void write(const std::filesystem::path& directory) const;

 private:
  std::unique_ptr<nlohmann::json> j_;
};

}  // namespace dada::io
