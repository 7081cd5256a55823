#include "fixtures.hpp"

#include <unistd.h>

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace distobs::fixtures {

using nlohmann::json;

std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(DISTOBS_DATA_DIR) / name;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string pendubot_json() { return read_file(data_path("pendubot.json")); }

std::string broken_pendubot_json() {
  json doc = json::parse(pendubot_json());
  doc["adjacency"][0][3] = 0.0;
  return doc.dump();
}

Problem pendubot() { return parse_model(pendubot_json()); }

Problem pendubot_without_edge_4_to_1() { return parse_model(broken_pendubot_json()); }

CouplingGains paper_gains() {
  CouplingGains gains;
  for (int l = 0; l < 2; ++l) {
    for (int h = 0; h < 6; ++h) gains[{l, h}] = 0.2 + 0.1 * h;
  }
  return gains;
}

std::string paper_gains_json() {
  json doc = json::object();
  for (const auto& [id, k] : paper_gains()) doc[id.label()] = k;
  return doc.dump();
}

std::string scalar_line_json() {
  return R"({
  "eigenvalues": [{"re": 2.0, "im": 0.0, "miniblock_dims": [1]}],
  "B": [[1.0]],
  "sensors": [[[1.0]], [[0.0]], [[0.0]]],
  "adjacency": [[0, 0, 0], [1, 0, 0], [0, 1, 0]],
  "simulation": {"horizon": 200, "x0": [0.0], "observer_init": [[1.0], [-2.0], [3.0]]}
})";
}

Problem scalar_line() { return parse_model(scalar_line_json()); }

std::filesystem::path temp_dir(const std::string& tag) {
  static int counter = 0;
  const auto dir = std::filesystem::temp_directory_path() /
                   ("distobs_" + tag + "_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace distobs::fixtures
