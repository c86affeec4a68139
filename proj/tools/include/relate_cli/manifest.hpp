#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "relate_cli/report_io.hpp"

namespace relate::cli {

std::string tool_version();

// Hex SHA-256 of a file's bytes. Throws relate::Error when unreadable.
std::string sha256_file(const std::string& path);
std::string sha256_bytes(std::string_view data);

struct InputDigest {
  std::string path;
  std::string sha256;
};

// Everything needed to rerun a command. Only `timestamps` changes between
// identical runs.
struct RunManifest {
  std::string command;
  Json config = Json::object();
  std::vector<InputDigest> inputs;
  std::uint64_t seed = 0;
  std::string version = tool_version();
  std::string started;
  std::string finished;

  void add_input(const std::string& path) { inputs.push_back({path, sha256_file(path)}); }
  Json to_json() const;
};

// UTC, ISO 8601 with seconds.
std::string utc_now();

}  // namespace relate::cli
