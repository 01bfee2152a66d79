#include "model_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace a3t::cli {

using nlohmann::json;

std::string model_to_json(const SavedModel& m) {
  json j;
  j["format"] = "a3t-model-1";
  j["layer_sizes"] = m.params.spec.layer_sizes;
  j["activation"] = to_string(m.params.spec.hidden_activation);
  j["mode"] = m.mode;
  j["label_column"] = m.label_column;
  j["feature_names"] = m.feature_names;
  j["class_names"] = m.class_names;
  json layers = json::array();
  for (std::size_t l = 0; l < m.params.weights.size(); ++l) {
    const Matrix& w = m.params.weights[l];
    json rows = json::array();
    for (std::size_t r = 0; r < w.rows(); ++r) {
      const auto row = w.row(r);
      rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    layers.push_back({{"weights", rows}, {"biases", m.params.biases[l]}});
  }
  j["layers"] = layers;
  if (m.scaler) j["scaler"] = {{"mean", m.scaler->mean}, {"scale", m.scaler->scale}};
  return j.dump(1) + "\n";
}

SavedModel model_from_json(const std::string& text) {
  SavedModel m;
  try {
    const json j = json::parse(text);
    if (j.at("format") != "a3t-model-1") throw std::invalid_argument("unknown model format");
    m.params.spec.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
    m.params.spec.hidden_activation = parse_activation(j.at("activation").get<std::string>());
    m.mode = j.value("mode", "");
    m.label_column = j.value("label_column", "");
    m.feature_names = j.value("feature_names", std::vector<std::string>{});
    m.class_names = j.value("class_names", std::vector<std::string>{});
    for (const auto& layer : j.at("layers")) {
      const auto rows = layer.at("weights").get<std::vector<std::vector<double>>>();
      const std::size_t cols = rows.empty() ? 0 : rows.front().size();
      std::vector<double> flat;
      for (const auto& r : rows) {
        if (r.size() != cols) throw std::invalid_argument("ragged weight matrix");
        flat.insert(flat.end(), r.begin(), r.end());
      }
      m.params.weights.emplace_back(rows.size(), cols, std::move(flat));
      m.params.biases.push_back(layer.at("biases").get<std::vector<double>>());
    }
    if (j.contains("scaler")) {
      FeatureScaler s;
      s.mean = j["scaler"].at("mean").get<std::vector<double>>();
      s.scale = j["scaler"].at("scale").get<std::vector<double>>();
      m.scaler = std::move(s);
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed model file: ") + e.what());
  }
  m.params.validate();
  return m;
}

void save_model(const std::filesystem::path& path, const SavedModel& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << model_to_json(m);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

SavedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace a3t::cli
