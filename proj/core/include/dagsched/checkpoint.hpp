#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "dagsched/matrix.hpp"

namespace dagsched {

// Versioned blob of named shaped arrays plus the architecture metadata needed
// to rebuild a policy. The JSON encoding round-trips doubles bit-exactly.
struct Checkpoint {
  int format_version = 1;
  int window = 1;
  int hidden = 64;
  bool cp_feature = true;
  std::map<std::string, Matrix> arrays;
};

std::string checkpoint_to_json(const Checkpoint &checkpoint);
Checkpoint checkpoint_from_json(const std::string &text);

void save_checkpoint(const std::filesystem::path &path, const Checkpoint &checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path &path);

}  // namespace dagsched
