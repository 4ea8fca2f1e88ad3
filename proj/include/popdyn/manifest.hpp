#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace popdyn {

inline constexpr const char* kToolVersion = "0.1.0";

/// Reproducibility sidecar written next to every command's outputs: the
/// command, its fully resolved configuration, the file paths touched, and
/// the base RNG seed.
struct RunManifest {
  std::string command;
  std::string version = kToolVersion;
  std::map<std::string, std::string> config;  // resolved flag -> value
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::uint64_t seed = 0;
  bool seeded = false;

  std::string to_json() const;
  void write(const std::string& path) const;
};

}  // namespace popdyn
