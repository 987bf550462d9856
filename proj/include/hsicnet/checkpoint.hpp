#pragma once

#include <map>
#include <string>
#include <vector>

namespace hsicnet::ckpt {

// Versioned binary container: a JSON configuration blob plus named float64
// arrays, written little-endian. Round-trips bit-exactly.
struct Checkpoint {
  std::string config_json;
  std::map<std::string, std::vector<double>> arrays;
};

void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace hsicnet::ckpt
