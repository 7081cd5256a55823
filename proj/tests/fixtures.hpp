#pragma once

#include <filesystem>
#include <string>

#include "distobs/gains.hpp"
#include "distobs/model.hpp"

namespace distobs::fixtures {

std::filesystem::path data_path(const std::string& name);

/// The six-Pendubot network shipped in data/pendubot.json.
Problem pendubot();
/// Same network with the edge 4 -> 1 removed.
Problem pendubot_without_edge_4_to_1();
std::string pendubot_json();
std::string broken_pendubot_json();

/// k = 0.2, 0.3, ..., 0.7 for h = 1..6 on both unstable eigenvalues.
CouplingGains paper_gains();
std::string paper_gains_json();

/// Scalar plant λ = 2 on the line 1 -> 2 -> 3; only agent 1 measures it.
Problem scalar_line();
std::string scalar_line_json();

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& tag);

void write_file(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace distobs::fixtures
