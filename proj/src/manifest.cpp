#include "popdyn/manifest.hpp"

#include "json.hpp"
#include "popdyn/trace_io.hpp"

namespace popdyn {

std::string RunManifest::to_json() const {
  nlohmann::json j;
  j["command"] = command;
  j["version"] = version;
  j["config"] = config;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  if (seeded) j["seed"] = seed;
  return j.dump(2) + "\n";
}

void RunManifest::write(const std::string& path) const {
  io::write_text_file(path, to_json());
}

}  // namespace popdyn
