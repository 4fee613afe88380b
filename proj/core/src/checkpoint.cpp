#include "dagsched/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace dagsched {

std::string checkpoint_to_json(const Checkpoint &checkpoint) {
  nlohmann::ordered_json doc;
  doc["format_version"] = checkpoint.format_version;
  doc["window"] = checkpoint.window;
  doc["hidden"] = checkpoint.hidden;
  doc["cp_feature"] = checkpoint.cp_feature;
  nlohmann::ordered_json arrays;
  for (const auto &[name, matrix] : checkpoint.arrays) {
    arrays[name] = {{"rows", matrix.rows}, {"cols", matrix.cols}, {"data", matrix.data}};
  }
  doc["arrays"] = std::move(arrays);
  return doc.dump();
}

Checkpoint checkpoint_from_json(const std::string &text) {
  const auto doc = nlohmann::json::parse(text);
  Checkpoint checkpoint;
  checkpoint.format_version = doc.at("format_version").get<int>();
  if (checkpoint.format_version != 1) {
    throw std::runtime_error("checkpoint: unsupported format_version " +
                             std::to_string(checkpoint.format_version));
  }
  checkpoint.window = doc.at("window").get<int>();
  checkpoint.hidden = doc.at("hidden").get<int>();
  checkpoint.cp_feature = doc.at("cp_feature").get<bool>();
  for (const auto &[name, entry] : doc.at("arrays").items()) {
    Matrix matrix(entry.at("rows").get<int>(), entry.at("cols").get<int>());
    const auto &data = entry.at("data");
    if (static_cast<int>(data.size()) != matrix.size()) {
      throw std::runtime_error("checkpoint: array '" + name + "' has inconsistent shape");
    }
    matrix.data = data.get<std::vector<double>>();
    checkpoint.arrays[name] = std::move(matrix);
  }
  return checkpoint;
}

void save_checkpoint(const std::filesystem::path &path, const Checkpoint &checkpoint) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("checkpoint: cannot open " + path.string() + " for writing");
  }
  out << checkpoint_to_json(checkpoint) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("checkpoint: cannot open " + path.string());
  }
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return checkpoint_from_json(text);
}

}  // namespace dagsched
