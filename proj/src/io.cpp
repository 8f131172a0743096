#include "dada/io.hpp"

#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dada/rng.hpp"
#include "dada/version.hpp"

namespace dada::io {

namespace fs = std::filesystem;

std::string format_g12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

CsvWriter::CsvWriter(const fs::path& path,
                     const std::vector<std::string>& header)
    : out_(path), path_(path), n_cols_(header.size()) {
  if (!out_) throw Error("cannot open " + path.string() + " for writing");
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out_ << ',';
    out_ << header[i];
  }
  out_ << '\n';
}

CsvWriter::~CsvWriter() = default;

CsvWriter& CsvWriter::cell(double v) {
  row_.push_back(format_g12(v));
  return *this;
}
CsvWriter& CsvWriter::cell(int v) {
  row_.push_back(std::to_string(v));
  return *this;
}
CsvWriter& CsvWriter::cell(long v) {
  row_.push_back(std::to_string(v));
  return *this;
}
CsvWriter& CsvWriter::cell(const std::string& v) {
  row_.push_back(v);
  return *this;
}

void CsvWriter::end_row() {
  if (row_.size() != n_cols_)
    throw Error("csv row width mismatch in " + path_.string());
  for (std::size_t i = 0; i < row_.size(); ++i) {
    if (i) out_ << ',';
    out_ << row_[i];
  }
  out_ << '\n';
  row_.clear();
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  CsvTable t;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : s) {
      if (c == ',') {
        cells.push_back(cur);
        cur.clear();
      } else if (c != '\r') {
        cur.push_back(c);
      }
    }
    cells.push_back(cur);
    return cells;
  };
  if (!std::getline(in, line))
    throw Error("empty csv file " + path.string());
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    t.rows.push_back(split(line));
  }
  return t;
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

double CsvTable::number(std::size_t row, int col) const {
  if (row >= rows.size() || col < 0 ||
      static_cast<std::size_t>(col) >= rows[row].size())
    throw Error("csv cell out of range at data row " + std::to_string(row + 1));
  const std::string& cell = rows[row][static_cast<std::size_t>(col)];
  try {
    std::size_t pos = 0;
    double v = std::stod(cell, &pos);
    if (pos != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("invalid numeric value '" + cell + "' at data row " +
                      std::to_string(row + 1) + ", column '" +
                      header[static_cast<std::size_t>(col)] + "'");
  }
}

void write_trajectory_csv(const fs::path& path, const models::Trajectory& traj) {
  const auto n = traj.states.empty() ? 0 : traj.states[0].size();
  std::vector<std::string> header{"t", "time_days"};
  for (Eigen::Index i = 0; i < n; ++i)
    header.push_back("state_" + std::to_string(i + 1));
  CsvWriter w(path, header);
  for (std::size_t t = 0; t < traj.states.size(); ++t) {
    w.cell(static_cast<long>(t)).cell(static_cast<double>(t) * traj.dt_per_step);
    for (Eigen::Index i = 0; i < n; ++i) w.cell(traj.states[t](i));
    w.end_row();
  }
}

void write_observations_csv(const fs::path& path,
                            const models::ObservationSequence& y,
                            double dt_per_step) {
  const auto d = y.obs.empty() ? 0 : y.obs[0].size();
  std::vector<std::string> header{"t", "time_days"};
  for (Eigen::Index i = 0; i < d; ++i)
    header.push_back("obs_" + std::to_string(i + 1));
  CsvWriter w(path, header);
  for (std::size_t t = 0; t < y.obs.size(); ++t) {
    w.cell(static_cast<long>(t)).cell(static_cast<double>(t) * dt_per_step);
    for (Eigen::Index i = 0; i < d; ++i) w.cell(y.obs[t](i));
    w.end_row();
  }
}

namespace {

// Columns whose names start with `prefix`, in numeric order.
std::vector<int> value_columns(const CsvTable& t, const std::string& prefix) {
  std::vector<int> cols;
  for (int i = 1;; ++i) {
    int c = t.column(prefix + std::to_string(i));
    if (c < 0) break;
    cols.push_back(c);
  }
  return cols;
}

}  // namespace

models::Trajectory read_trajectory_csv(const fs::path& path) {
  CsvTable t = read_csv(path);
  auto cols = value_columns(t, "state_");
  if (cols.empty())
    throw ConfigError("trajectory file " + path.string() +
                      " has no state_* columns");
  models::Trajectory traj;
  int time_col = t.column("time_days");
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    Vec x(static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i)
      x(static_cast<Eigen::Index>(i)) = t.number(r, cols[i]);
    traj.states.push_back(std::move(x));
  }
  if (traj.states.size() >= 2 && time_col >= 0)
    traj.dt_per_step = t.number(1, time_col) - t.number(0, time_col);
  return traj;
}

models::ObservationSequence read_observations_csv(const fs::path& path) {
  CsvTable t = read_csv(path);
  auto cols = value_columns(t, "obs_");
  if (cols.empty())
    throw ConfigError("observation file " + path.string() +
                      " has no obs_* columns");
  models::ObservationSequence y;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    Vec v(static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i)
      v(static_cast<Eigen::Index>(i)) = t.number(r, cols[i]);
    y.obs.push_back(std::move(v));
  }
  if (y.obs.empty())
    throw ConfigError("observation file " + path.string() + " has no rows");
  return y;
}

std::string file_checksum_hex(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string() + " for checksum");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    h = fnv1a_bytes(buf, static_cast<std::size_t>(in.gcount()), h);
    if (!in) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(h));
  return hex;
}

Manifest::Manifest(std::string command, std::uint64_t master_seed)
    : j_(std::make_unique<nlohmann::json>()) {
  (*j_)["command"] = std::move(command);
  (*j_)["version"] = kVersion;
  (*j_)["master_seed"] = master_seed;
  (*j_)["outputs"] = nlohmann::json::object();
  (*j_)["timings_seconds"] = nlohmann::json::object();
  (*j_)["failures"] = nlohmann::json::array();
}

Manifest::~Manifest() = default;

void Manifest::set_config(const nlohmann::json& snapshot) {
  (*j_)["config"] = snapshot;
}

void Manifest::add_output(const fs::path& file) {
  (*j_)["outputs"][file.filename().string()] = file_checksum_hex(file);
}

void Manifest::add_timing(const std::string& name, double seconds) {
  (*j_)["timings_seconds"][name] = seconds;
}

void Manifest::add_failure(const std::string& message) {
  (*j_)["failures"].push_back(message);
}

void Manifest::set_result(const std::string& key, const nlohmann::json& value) {
  (*j_)["results"][key] = value;
}

void Manifest::write(const fs::path& directory) const {
  std::ofstream out(directory / "manifest.json");
  if (!out) throw Error("cannot write manifest in " + directory.string());
  out << j_->dump(2) << '\n';
}

}  // namespace dada::io
