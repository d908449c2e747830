#include "bioqa/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "bioqa/errors.hpp"

namespace bioqa {

using nlohmann::json;

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json out;
  out["rows"] = m.rows();
  out["cols"] = m.cols();
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  out["data"] = std::move(data);
  return out;
}

void matrix_from_json(const json& j, const std::string& name, Eigen::MatrixXd& m) {
  const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
  if (rows != m.rows() || cols != m.cols())
    throw Error("checkpoint: tensor " + name + " has shape " + std::to_string(rows) + "x" +
                std::to_string(cols) + ", expected " + std::to_string(m.rows()) + "x" +
                std::to_string(m.cols()));
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw Error("checkpoint: tensor " + name + " has wrong element count");
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = data[k++].get<double>();
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelParams& model) {
  json root;
  root["format"] = "bioqa-checkpoint-v1";
  const EncoderConfig& cfg = model.encoder.cfg;
  root["encoder_config"] = {{"hidden", cfg.hidden},   {"layers", cfg.layers},
                            {"heads", cfg.heads},     {"ffn", cfg.ffn},
                            {"vocab", cfg.vocab},     {"max_positions", cfg.max_positions}};
  json params;
  for (const auto& [name, mat] : model.encoder.named_params()) params[name] = matrix_to_json(*mat);
  for (const auto& [name, mat] : model.heads.named_params()) params[name] = matrix_to_json(*mat);
  root["params"] = std::move(params);

  std::ofstream out(path);
  if (!out) throw Error("checkpoint: cannot write " + path.string());
  out << root.dump() << "\n";
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("checkpoint: cannot open " + path.string());
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("checkpoint: invalid JSON in " + path.string() + ": " + e.what());
  }
  if (root.value("format", "") != "bioqa-checkpoint-v1")
    throw Error("checkpoint: unrecognized format in " + path.string());

  const auto& jc = root.at("encoder_config");
  EncoderConfig cfg;
  cfg.hidden = jc.at("hidden").get<int>();
  cfg.layers = jc.at("layers").get<int>();
  cfg.heads = jc.at("heads").get<int>();
  cfg.ffn = jc.at("ffn").get<int>();
  cfg.vocab = jc.at("vocab").get<int>();
  cfg.max_positions = jc.at("max_positions").get<int>();

  ModelParams model;
  model.encoder = EncoderParams::init(cfg, 0);
  model.heads = HeadParams::init(cfg.hidden, 0);

  const auto& params = root.at("params");
  auto load_all = [&](auto named) {
    for (auto& [name, mat] : named) {
      if (!params.contains(name)) throw Error("checkpoint: missing tensor " + name);
      matrix_from_json(params.at(name), name, *mat);
    }
  };
  load_all(model.encoder.named_params());
  load_all(model.heads.named_params());
  return model;
}

}  // namespace bioqa
