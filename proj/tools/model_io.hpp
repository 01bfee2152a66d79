#pragma once

// model.json: network shape, parameters and the input encoding needed to
// apply the model to new CSV rows.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "a3t/data.hpp"
#include "a3t/numcore.hpp"

namespace a3t::cli {

struct SavedModel {
  ModelParams params;
  std::string label_column;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;
  std::optional<FeatureScaler> scaler;
  std::string mode;
};

std::string model_to_json(const SavedModel& m);
SavedModel model_from_json(const std::string& text);

void save_model(const std::filesystem::path& path, const SavedModel& m);
SavedModel load_model(const std::filesystem::path& path);

}  // namespace a3t::cli
