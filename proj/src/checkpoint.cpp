#include "rml/checkpoint.hpp"

#include <json.hpp>

#include "rml/binio.hpp"
#include "rml/util.hpp"

namespace rml::nn {

namespace {

using nlohmann::ordered_json;

ordered_json spec_to_json(const LayerSpec& s) {
  ordered_json j;
  switch (s.kind) {
    case LayerSpec::Kind::conv2d:
      j["type"] = "conv2d";
      j["filters"] = s.filters;
      j["kh"] = s.kh;
      j["kw"] = s.kw;
      j["pad"] = s.pad == Pad::same ? "same" : "valid";
      break;
    case LayerSpec::Kind::dense:
      j["type"] = "dense";
      j["units"] = s.units;
      j["act"] = s.act == Act::relu ? "relu" : "linear";
      break;
    case LayerSpec::Kind::relu:
      j["type"] = "relu";
      break;
    case LayerSpec::Kind::dropout:
      j["type"] = "dropout";
      j["rate"] = s.rate;
      break;
    case LayerSpec::Kind::reshape:
      j["type"] = "reshape";
      j["shape"] = s.target_shape;
      break;
  }
  return j;
}

LayerSpec spec_from_json(const ordered_json& j) {
  const std::string type = j.at("type");
  if (type == "conv2d")
    return LayerSpec::Conv2D(j.at("filters"), j.at("kh"), j.at("kw"),
                             j.at("pad") == "same" ? Pad::same : Pad::valid);
  if (type == "dense")
    return LayerSpec::Dense(j.at("units"),
                            j.at("act") == "relu" ? Act::relu : Act::linear);
  if (type == "relu") return LayerSpec::ReLU();
  if (type == "dropout") return LayerSpec::Dropout(j.at("rate"));
  if (type == "reshape")
    return LayerSpec::Reshape(j.at("shape").get<Shape>());
  throw std::runtime_error("checkpoint: unknown layer type " + type);
}

}  // namespace

std::string serialize_checkpoint(const Network<float>& net,
                                 const CheckpointMeta& meta) {
  ordered_json j;
  j["role"] = meta.role;
  j["input_shape"] = net.input_shape();
  ordered_json layers = ordered_json::array();
  for (const auto& s : net.specs()) layers.push_back(spec_to_json(s));
  j["layers"] = layers;
  if (meta.code_prefix_layers >= 0)
    j["code_prefix_layers"] = meta.code_prefix_layers;
  if (meta.feature_prefix_layers >= 0)
    j["feature_prefix_layers"] = meta.feature_prefix_layers;
  j["class_table"] = meta.class_table;
  j["trained_class_ids"] = meta.trained_class_ids;
  j["seed"] = meta.seed;
  j["train_meta"] = {{"epochs_run", meta.epochs_run},
                     {"best_epoch", meta.best_epoch},
                     {"best_val_loss", meta.best_val_loss},
                     {"optimizer", meta.optimizer}};
  const std::string header = j.dump();

  std::string b;
  b.append("RMLW");
  binio::put_u16(b, kRmlwVersion);
  binio::put_u32(b, uint32_t(header.size()));
  b.append(header);
  const auto flat = net.save_params();
  binio::put_u32(b, uint32_t(flat.size()));
  binio::put_f32_array(b, flat.data(), flat.size());
  return b;
}

LoadedCheckpoint deserialize_checkpoint(const std::string& bytes) {
  binio::Reader r(bytes);
  r.magic("RMLW");
  const uint16_t version = r.u16();
  if (version != kRmlwVersion)
    throw std::runtime_error("RMLW: unsupported version " +
                             std::to_string(version));
  const uint32_t header_len = r.u32();
  std::string header(header_len, '\0');
  for (auto& c : header) c = char(r.u8());
  const ordered_json j = ordered_json::parse(header);

  std::vector<LayerSpec> specs;
  for (const auto& lj : j.at("layers")) specs.push_back(spec_from_json(lj));
  const Shape input_shape = j.at("input_shape").get<Shape>();

  CheckpointMeta meta;
  meta.role = j.at("role");
  if (j.contains("code_prefix_layers"))
    meta.code_prefix_layers = j.at("code_prefix_layers");
  if (j.contains("feature_prefix_layers"))
    meta.feature_prefix_layers = j.at("feature_prefix_layers");
  meta.class_table = j.at("class_table").get<std::vector<std::string>>();
  meta.trained_class_ids = j.at("trained_class_ids").get<std::vector<int>>();
  meta.seed = j.at("seed");
  const auto& tm = j.at("train_meta");
  meta.epochs_run = tm.at("epochs_run");
  meta.best_epoch = tm.at("best_epoch");
  meta.best_val_loss = tm.at("best_val_loss");
  meta.optimizer = tm.at("optimizer");

  LoadedCheckpoint out{Network<float>(specs, input_shape, meta.seed), meta};
  const uint32_t n_params = r.u32();
  std::vector<float> flat(n_params);
  r.f32_array(flat.data(), flat.size());
  out.net.load_params(flat);
  return out;
}

void save_checkpoint(const std::string& path, const Network<float>& net,
                     const CheckpointMeta& meta) {
  atomic_write_file(path, serialize_checkpoint(net, meta));
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  return deserialize_checkpoint(read_text_file(path));
}

}  // namespace rml::nn
