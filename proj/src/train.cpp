/* Copyright 2026 The IRSN Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "irsn/train.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "irsn/ops.hpp"
#include "irsn/optim.hpp"

namespace irsn {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch size must be >= 1");
  if (!(learning_rate > 0.0f)) throw ConfigError("train: learning rate must be positive");
  if (!(momentum >= 0.0f && momentum < 1.0f)) throw ConfigError("train: momentum must lie in [0, 1)");
  if (!(label_smoothing >= 0.0f && label_smoothing < 1.0f)) throw ConfigError("train: label smoothing must lie in [0, 1)");
  model.validate();
}

// ---------------------------------------------------------------------------
// Data

PreparedSplit prepare_split(const std::vector<SyntheticSample>& samples, const IrsnConfig& model_config) {
  PreparedSplit p;
  p.size = static_cast<int64_t>(samples.size());
  p.height = model_config.dfe.input_h;
  p.width = model_config.dfe.input_w;
  p.map_h = model_config.dfe.out_h();
  p.map_w = model_config.dfe.out_w();
  const int64_t plane = 3 * p.height * p.width;
  p.images.reserve(static_cast<size_t>(p.size * plane));
  for (const SyntheticSample& s : samples) {
    if (s.image.height != p.height || s.image.width != p.width) {
      throw ShapeError("sample " + s.id + " has resolution " + std::to_string(s.image.height) + "x" +
                       std::to_string(s.image.width) + ", model expects " + std::to_string(p.height) + "x" +
                       std::to_string(p.width));
    }
    p.images.insert(p.images.end(), s.image.pixels.begin(), s.image.pixels.end());
    p.labels.push_back(s.label);
    p.ids.push_back(s.id);
    p.masks.push_back(s.masks);
    for (int i = 0; i < kNumItems; ++i) {
      const ItemMask& m = s.masks[static_cast<size_t>(i)];
      auto down = downsample_mask(m, p.map_h, p.map_w, model_config.mask_downsample);
      p.item_maps[static_cast<size_t>(i)].insert(p.item_maps[static_cast<size_t>(i)].end(), down.begin(), down.end());
      p.presence[static_cast<size_t>(i)].push_back(detect_absent(m, model_config.absent_tau) ? 0.0f : 1.0f);
    }
  }
  if (model_config.use_gfe && p.size > 0) {
    // The GFE is frozen, so its output per image is a constant of the data.
    GeneralFeatureExtractor gfe(model_config.gfe, p.height, p.width);
    NoGradGuard no_grad;
    p.gfe_dim = model_config.gfe.dim;
    p.general_features.reserve(static_cast<size_t>(p.size * p.gfe_dim));
    const int64_t chunk = 64;
    for (int64_t start = 0; start < p.size; start += chunk) {
      const int64_t n = std::min(chunk, p.size - start);
      std::vector<int64_t> idx(static_cast<size_t>(n));
      std::iota(idx.begin(), idx.end(), start);
      Tensor g = gfe.forward(p.images_of(idx));
      p.general_features.insert(p.general_features.end(), g.data().begin(), g.data().end());
    }
  }
  return p;
}

Tensor PreparedSplit::images_of(std::span<const int64_t> indices) const {
  const int64_t plane = 3 * height * width;
  std::vector<float> out(static_cast<size_t>(static_cast<int64_t>(indices.size()) * plane));
  for (size_t k = 0; k < indices.size(); ++k) {
    std::copy_n(images.data() + indices[k] * plane, plane, out.data() + static_cast<int64_t>(k) * plane);
  }
  return Tensor::from_data({static_cast<int64_t>(indices.size()), 3, height, width}, std::move(out));
}

ModelInput PreparedSplit::batch(std::span<const int64_t> indices) const {
  const int64_t b = static_cast<int64_t>(indices.size());
  ModelInput in;
  in.images = images_of(indices);
  const int64_t cells = map_h * map_w;
  for (int i = 0; i < kNumItems; ++i) {
    std::vector<float> maps(static_cast<size_t>(b * cells));
    std::vector<float> pres(static_cast<size_t>(b));
    for (int64_t k = 0; k < b; ++k) {
      std::copy_n(item_maps[static_cast<size_t>(i)].data() + indices[static_cast<size_t>(k)] * cells, cells, maps.data() + k * cells);
      pres[static_cast<size_t>(k)] = presence[static_cast<size_t>(i)][static_cast<size_t>(indices[static_cast<size_t>(k)])];
    }
    in.item_maps[static_cast<size_t>(i)] = Tensor::from_data({b, 1, map_h, map_w}, std::move(maps));
    in.presence[static_cast<size_t>(i)] = Tensor::from_data({b, 1, 1, 1}, std::move(pres));
  }
  if (!general_features.empty()) {
    std::vector<float> g(static_cast<size_t>(b * gfe_dim));
    for (int64_t k = 0; k < b; ++k) {
      std::copy_n(general_features.data() + indices[static_cast<size_t>(k)] * gfe_dim, gfe_dim, g.data() + k * gfe_dim);
    }
    in.general_features = Tensor::from_data({b, gfe_dim}, std::move(g));
  }
  return in;
}

// ---------------------------------------------------------------------------
// Training

namespace {

std::vector<int> labels_of(const PreparedSplit& split, std::span<const int64_t> idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (int64_t i : idx) out.push_back(split.labels[static_cast<size_t>(i)]);
  return out;
}

void check_labels(const PreparedSplit& split, int num_classes, const char* name) {
  for (int y : split.labels) {
    if (y < 0 || y >= num_classes) {
      throw ConfigError(std::string(name) + " split has label " + std::to_string(y) + " but the model has " +
                        std::to_string(num_classes) + " classes");
    }
  }
}

}  // namespace

TrainResult train(const TrainConfig& config, const PreparedSplit& train_set, const PreparedSplit& val_set,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.size == 0) throw ConfigError("train: empty training split");
  check_labels(train_set, config.model.num_classes, "train");
  check_labels(val_set, config.model.num_classes, "val");

  IrsnConfig model_config = config.model;
  model_config.seed = config.seed;
  auto model = std::make_unique<IrsnModel>(model_config);
  auto best = std::make_unique<IrsnModel>(model_config);
  SgdMomentum optimizer(model->trainable_parameters(), config.learning_rate, config.momentum);

  TrainResult result;
  std::mt19937_64 shuffle_rng(config.seed ^ 0x5DEECE66Dull);
  std::vector<int64_t> order(static_cast<size_t>(train_set.size));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    int64_t seen = 0;
    int batch_no = 0;
    for (int64_t start = 0; start < train_set.size; start += config.batch_size) {
      ++batch_no;
      const int64_t n = std::min<int64_t>(config.batch_size, train_set.size - start);
      std::span<const int64_t> idx(order.data() + start, static_cast<size_t>(n));
      ForwardResult fwd = model->forward(train_set.batch(idx));
      const std::vector<int> labels = labels_of(train_set, idx);
      Tensor loss = cross_entropy_label_smooth(fwd.logits, labels, config.label_smoothing);
      const float value = loss.item();
      if (!std::isfinite(value)) {
        throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch_no) + " (learning rate " + format_float(config.learning_rate) + ")");
      }
      if (epoch == 1 && batch_no == 1) result.first_batch_loss = value;
      optimizer.zero_grad();
      loss.backward();
      optimizer.step();
      loss_sum += static_cast<double>(value) * static_cast<double>(n);
      seen += n;
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = loss_sum / static_cast<double>(seen);
    m.val_accuracy = val_set.size > 0 ? evaluate(*model, val_set).accuracy : 0.0;
    result.history.push_back(m);
    if (m.val_accuracy > result.best_val_accuracy) {
      result.best_val_accuracy = m.val_accuracy;
      result.best_epoch = epoch;
      copy_parameters(*model, *best);
    }
    if (on_epoch) on_epoch(m);
  }
  result.model = std::move(best);
  return result;
}

TrainResult train(const TrainConfig& config, const EpochCallback& on_epoch) {
  if (config.dataset_root.empty()) throw ConfigError("train: dataset root not set");
  const PreparedSplit train_set = prepare_split(load_split(config.dataset_root, Split::kTrain), config.model);
  const PreparedSplit val_set = prepare_split(load_split(config.dataset_root, Split::kVal), config.model);
  return train(config, train_set, val_set, on_epoch);
}

// ---------------------------------------------------------------------------
// Evaluation

std::vector<std::vector<double>> EvalReport::row_normalized() const {
  std::vector<std::vector<double>> out(confusion.size());
  for (size_t r = 0; r < confusion.size(); ++r) {
    const int64_t total_row = std::accumulate(confusion[r].begin(), confusion[r].end(), int64_t{0});
    for (int64_t v : confusion[r]) out[r].push_back(total_row ? static_cast<double>(v) / static_cast<double>(total_row) : 0.0);
  }
  return out;
}

EvalReport evaluate(const IrsnModel& model, const PreparedSplit& split, int batch_size) {
  const int k = model.config().num_classes;
  check_labels(split, k, "evaluation");
  EvalReport report;
  report.num_classes = k;
  report.confusion.assign(static_cast<size_t>(k), std::vector<int64_t>(static_cast<size_t>(k), 0));
  NoGradGuard no_grad;
  std::vector<int64_t> idx;
  for (int64_t start = 0; start < split.size; start += batch_size) {
    const int64_t n = std::min<int64_t>(batch_size, split.size - start);
    idx.resize(static_cast<size_t>(n));
    std::iota(idx.begin(), idx.end(), start);
    const ForwardResult fwd = model.forward(split.batch(idx));
    for (int64_t j = 0; j < n; ++j) {
      const int pred = predict_style(fwd.logits.data().subspan(static_cast<size_t>(j * k), static_cast<size_t>(k)));
      const int truth = split.labels[static_cast<size_t>(start + j)];
      report.predictions.push_back(pred);
      ++report.confusion[static_cast<size_t>(truth)][static_cast<size_t>(pred)];
    }
  }
  report.total = split.size;
  for (int c = 0; c < k; ++c) {
    report.correct += report.confusion[static_cast<size_t>(c)][static_cast<size_t>(c)];
    const int64_t row = std::accumulate(report.confusion[static_cast<size_t>(c)].begin(), report.confusion[static_cast<size_t>(c)].end(), int64_t{0});
    report.per_class_accuracy.push_back(row ? static_cast<double>(report.confusion[static_cast<size_t>(c)][static_cast<size_t>(c)]) / static_cast<double>(row) : 0.0);
  }
  report.accuracy = report.total ? static_cast<double>(report.correct) / static_cast<double>(report.total) : 0.0;
  return report;
}

double evaluate_loss(const IrsnModel& model, const PreparedSplit& split, float label_smoothing, int batch_size) {
  NoGradGuard no_grad;
  double total = 0.0;
  std::vector<int64_t> idx;
  for (int64_t start = 0; start < split.size; start += batch_size) {
    const int64_t n = std::min<int64_t>(batch_size, split.size - start);
    idx.resize(static_cast<size_t>(n));
    std::iota(idx.begin(), idx.end(), start);
    const ForwardResult fwd = model.forward(split.batch(idx));
    total += static_cast<double>(cross_entropy_label_smooth(fwd.logits, labels_of(split, idx), label_smoothing).item()) * static_cast<double>(n);
  }
  return split.size ? total / static_cast<double>(split.size) : 0.0;
}

// ---------------------------------------------------------------------------
// Parameters and checkpoints

void copy_parameters(const IrsnModel& from, IrsnModel& to) {
  const ParamList src = from.named_parameters();
  ParamList dst = to.named_parameters();
  if (src.size() != dst.size()) throw CheckpointError("copy_parameters: architectures differ");
  for (size_t i = 0; i < src.size(); ++i) {
    if (src[i].name != dst[i].name || src[i].tensor.shape() != dst[i].tensor.shape()) {
      throw CheckpointError("copy_parameters: mismatch at " + src[i].name);
    }
    std::copy(src[i].tensor.data().begin(), src[i].tensor.data().end(), dst[i].tensor.data().begin());
  }
}

uint64_t parameter_checksum(const IrsnModel& model, const std::string& prefix) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (const NamedTensor& p : model.named_parameters()) {
    if (p.name.rfind(prefix, 0) != 0) continue;
    const auto bytes = std::as_bytes(p.tensor.data());
    for (std::byte b : bytes) {
      h ^= static_cast<uint64_t>(b);
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

namespace {

template <typename T>
void put_le(std::string& out, T value) {
  for (size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((static_cast<uint64_t>(value) >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    uint64_t v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }
  std::string take(size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  size_t offset() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw CheckpointError("checkpoint truncated at offset " + std::to_string(pos_) + " while reading " + what);
    }
  }
  const std::string& bytes_;
  size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const IrsnModel& model) {
  std::string out = "IRSN";
  put_le<uint32_t>(out, kCheckpointVersion);
  const std::string cfg = model_config_to_kv(model.config()).serialize();
  put_le<uint32_t>(out, static_cast<uint32_t>(cfg.size()));
  out += cfg;
  const ParamList params = model.named_parameters();
  put_le<uint32_t>(out, static_cast<uint32_t>(params.size()));
  for (const NamedTensor& p : params) {
    put_le<uint16_t>(out, static_cast<uint16_t>(p.name.size()));
    out += p.name;
    put_le<uint8_t>(out, static_cast<uint8_t>(p.tensor.rank()));
    for (int64_t d : p.tensor.shape()) put_le<uint32_t>(out, static_cast<uint32_t>(d));
    for (float v : p.tensor.data()) put_le<uint32_t>(out, std::bit_cast<uint32_t>(v));
  }
  return out;
}

std::unique_ptr<IrsnModel> parse_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  const std::string magic = r.take(4, "magic");
  if (magic != "IRSN") throw CheckpointError("bad magic at offset 0: expected \"IRSN\"");
  const uint32_t version = r.get<uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) + " at offset 4");
  }
  const uint32_t cfg_len = r.get<uint32_t>("config length");
  const std::string cfg_text = r.take(cfg_len, "config text");
  IrsnConfig cfg;
  try {
    cfg = model_config_from_kv(KeyValueConfig::parse(cfg_text));
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("invalid config block at offset 12: ") + e.what());
  }
  auto model = std::make_unique<IrsnModel>(cfg);
  ParamList params = model->named_parameters();
  const size_t count_offset = r.offset();
  const uint32_t count = r.get<uint32_t>("tensor count");
  if (count != params.size()) {
    throw CheckpointError("tensor count " + std::to_string(count) + " at offset " + std::to_string(count_offset) +
                          " does not match architecture (" + std::to_string(params.size()) + ")");
  }
  for (NamedTensor& p : params) {
    const size_t at = r.offset();
    const uint16_t name_len = r.get<uint16_t>("tensor name length");
    const std::string name = r.take(name_len, "tensor name");
    if (name != p.name) throw CheckpointError("unexpected tensor '" + name + "' at offset " + std::to_string(at) + ", expected '" + p.name + "'");
    const uint8_t rank = r.get<uint8_t>("tensor rank");
    Shape shape;
    for (uint8_t i = 0; i < rank; ++i) shape.push_back(r.get<uint32_t>("tensor dims"));
    if (shape != p.tensor.shape()) {
      throw CheckpointError("tensor '" + name + "' at offset " + std::to_string(at) + " has shape " + shape_str(shape) +
                            ", expected " + shape_str(p.tensor.shape()));
    }
    auto data = p.tensor.data();
    for (float& v : data) v = std::bit_cast<float>(r.get<uint32_t>("tensor payload"));
  }
  if (!r.done()) throw CheckpointError("trailing bytes after offset " + std::to_string(r.offset()));
  return model;
}

void save_checkpoint(const IrsnModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_checkpoint(model));
}

std::unique_ptr<IrsnModel> load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("checkpoint not found: " + path.string());
  return parse_checkpoint(read_file(path));
}

// ---------------------------------------------------------------------------
// Config plumbing

namespace {

std::string join_ints(const std::vector<int64_t>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::vector<int64_t> split_ints(const std::string& text, const std::string& key) {
  std::vector<int64_t> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      size_t used = 0;
      out.push_back(std::stoll(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError("config key " + key + ": '" + text + "' is not a comma-separated integer list");
    }
  }
  return out;
}

std::pair<int64_t, int64_t> parse_grid(const std::string& text, const std::string& key) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    return {std::stoll(text.substr(0, x)), std::stoll(text.substr(x + 1))};
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": '" + text + "' is not of the form HxW");
  }
}

}  // namespace

KeyValueConfig model_config_to_kv(const IrsnConfig& c) {
  KeyValueConfig kv;
  std::vector<int64_t> channels, strides;
  for (const DfeStage& s : c.dfe.stages) {
    channels.push_back(s.out_channels);
    strides.push_back(s.stride);
  }
  kv.set("model.dfe.channels", join_ints(channels));
  kv.set("model.dfe.strides", join_ints(strides));
  kv.set("model.input", std::to_string(c.dfe.input_h) + "x" + std::to_string(c.dfe.input_w));
  kv.set("model.gfe.dim", c.gfe.dim);
  kv.set("model.gfe.seed", std::to_string(c.gfe.seed));
  kv.set("model.encoder.blocks", static_cast<int64_t>(c.encoder.blocks));
  kv.set("model.encoder.heads", static_cast<int64_t>(c.encoder.heads));
  kv.set("model.encoder.mlp_ratio", static_cast<int64_t>(c.encoder.mlp_ratio));
  kv.set("model.aap", std::to_string(c.aap_h) + "x" + std::to_string(c.aap_w));
  kv.set("model.head_hidden", c.head_hidden);
  kv.set("model.num_classes", static_cast<int64_t>(c.num_classes));
  kv.set("model.fusion", c.fusion == FusionMode::kGated ? "gff" : "plain_concat");
  kv.set_bool("model.use_irp", c.use_irp);
  kv.set_bool("model.use_gfe", c.use_gfe);
  kv.set("model.mask_downsample", c.mask_downsample == MaskDownsample::kArea ? "area" : "nearest");
  kv.set("model.absent_tau", format_float(c.absent_tau));
  kv.set("model.seed", std::to_string(c.seed));
  return kv;
}

IrsnConfig model_config_from_kv(const KeyValueConfig& kv, IrsnConfig c) {
  if (kv.has("model.dfe.channels") || kv.has("model.dfe.strides")) {
    std::vector<int64_t> channels, strides;
    for (const DfeStage& s : c.dfe.stages) {
      channels.push_back(s.out_channels);
      strides.push_back(s.stride);
    }
    if (kv.has("model.dfe.channels")) channels = split_ints(kv.get("model.dfe.channels", ""), "model.dfe.channels");
    if (kv.has("model.dfe.strides")) strides = split_ints(kv.get("model.dfe.strides", ""), "model.dfe.strides");
    if (channels.size() != strides.size()) throw ConfigError("model.dfe.channels and model.dfe.strides differ in length");
    c.dfe.stages.clear();
    for (size_t i = 0; i < channels.size(); ++i) c.dfe.stages.push_back({channels[i], static_cast<int>(strides[i])});
  }
  if (kv.has("model.input")) std::tie(c.dfe.input_h, c.dfe.input_w) = parse_grid(kv.get("model.input", ""), "model.input");
  c.gfe.dim = kv.get_int("model.gfe.dim", c.gfe.dim);
  c.gfe.seed = static_cast<uint64_t>(kv.get_int("model.gfe.seed", static_cast<int64_t>(c.gfe.seed)));
  c.encoder.blocks = static_cast<int>(kv.get_int("model.encoder.blocks", c.encoder.blocks));
  c.encoder.heads = static_cast<int>(kv.get_int("model.encoder.heads", c.encoder.heads));
  c.encoder.mlp_ratio = static_cast<int>(kv.get_int("model.encoder.mlp_ratio", c.encoder.mlp_ratio));
  if (kv.has("model.aap")) std::tie(c.aap_h, c.aap_w) = parse_grid(kv.get("model.aap", ""), "model.aap");
  c.head_hidden = kv.get_int("model.head_hidden", c.head_hidden);
  c.num_classes = static_cast<int>(kv.get_int("model.num_classes", c.num_classes));
  if (kv.has("model.fusion")) {
    const std::string f = kv.get("model.fusion", "");
    if (f == "gff") c.fusion = FusionMode::kGated;
    else if (f == "plain_concat") c.fusion = FusionMode::kPlainConcat;
    else throw ConfigError("model.fusion must be gff or plain_concat, got '" + f + "'");
  }
  c.use_irp = kv.get_bool("model.use_irp", c.use_irp);
  c.use_gfe = kv.get_bool("model.use_gfe", c.use_gfe);
  if (kv.has("model.mask_downsample")) {
    const std::string m = kv.get("model.mask_downsample", "");
    if (m == "area") c.mask_downsample = MaskDownsample::kArea;
    else if (m == "nearest") c.mask_downsample = MaskDownsample::kNearest;
    else throw ConfigError("model.mask_downsample must be area or nearest, got '" + m + "'");
  }
  c.absent_tau = static_cast<float>(kv.get_double("model.absent_tau", c.absent_tau));
  c.seed = static_cast<uint64_t>(kv.get_int("model.seed", static_cast<int64_t>(c.seed)));
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

KeyValueConfig train_config_to_kv(const TrainConfig& t) {
  KeyValueConfig kv = model_config_to_kv(t.model);
  kv.set("train.epochs", static_cast<int64_t>(t.epochs));
  kv.set("train.batch_size", static_cast<int64_t>(t.batch_size));
  kv.set("train.learning_rate", format_float(t.learning_rate));
  kv.set("train.momentum", format_float(t.momentum));
  kv.set("train.label_smoothing", format_float(t.label_smoothing));
  kv.set("train.seed", std::to_string(t.seed));
  kv.set("train.dataset", t.dataset_root);
  return kv;
}

TrainConfig train_config_from_kv(const KeyValueConfig& kv, TrainConfig t) {
  t.model = model_config_from_kv(kv, t.model);
  t.epochs = static_cast<int>(kv.get_int("train.epochs", t.epochs));
  t.batch_size = static_cast<int>(kv.get_int("train.batch_size", t.batch_size));
  t.learning_rate = static_cast<float>(kv.get_double("train.learning_rate", t.learning_rate));
  t.momentum = static_cast<float>(kv.get_double("train.momentum", t.momentum));
  t.label_smoothing = static_cast<float>(kv.get_double("train.label_smoothing", t.label_smoothing));
  t.seed = static_cast<uint64_t>(kv.get_int("train.seed", static_cast<int64_t>(t.seed)));
  t.dataset_root = kv.get("train.dataset", t.dataset_root);
  t.validate();
  return t;
}

const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys = [] {
    std::set<std::string> k;
    const KeyValueConfig defaults = train_config_to_kv(TrainConfig{});
    for (const auto& [key, v] : defaults.entries()) k.insert(key);
    for (const char* extra :
         {"data.variant", "data.classes", "data.train_per_class", "data.val_per_class", "data.test_per_class",
          "data.class_weights", "data.seed", "data.height", "data.width", "data.min_distractors", "data.max_distractors",
          "data.speckle", "data.hue_jitter", "eval.checkpoint", "eval.split", "ablate.variants", "ablate.seeds",
          "ablate.split", "attribute.checkpoint", "attribute.baseline", "attribute.split", "attribute.count",
          "attribute.tap", "attribute.normalize", "attribute.select"}) {
      k.insert(extra);
    }
    return k;
  }();
  return keys;
}

// ---------------------------------------------------------------------------
// CSV

std::string metrics_csv(const std::vector<EpochMetrics>& history) {
  std::ostringstream os;
  os << "epoch,train_loss,val_accuracy\n";
  for (const EpochMetrics& m : history) os << m.epoch << ',' << format_double(m.train_loss) << ',' << format_double(m.val_accuracy) << '\n';
  return os.str();
}

std::string confusion_csv(const EvalReport& report, const std::vector<std::string>& names, bool normalized) {
  std::ostringstream os;
  os << "true\\predicted";
  for (const std::string& n : names) os << ',' << n;
  os << '\n';
  const auto norm = report.row_normalized();
  for (size_t r = 0; r < report.confusion.size(); ++r) {
    os << (r < names.size() ? names[r] : std::to_string(r));
    for (size_t c = 0; c < report.confusion[r].size(); ++c) {
      os << ',';
      if (normalized) os << format_double(norm[r][c]);
      else os << report.confusion[r][c];
    }
    os << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Ablations

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

AblationVariant ablation_variant(const std::string& name) {
  if (name == "full") return {name, [](IrsnConfig&) {}};
  if (name == "gap") return {name, [](IrsnConfig& c) { c.aap_h = c.aap_w = 1; }};
  if (name == "no-irp") return {name, [](IrsnConfig& c) { c.use_irp = false; }};
  if (name == "no-gfe") return {name, [](IrsnConfig& c) { c.use_gfe = false; }};
  if (name == "plain-concat") return {name, [](IrsnConfig& c) { c.fusion = FusionMode::kPlainConcat; }};
  if (name == "nearest-mask") return {name, [](IrsnConfig& c) { c.mask_downsample = MaskDownsample::kNearest; }};
  if (name.rfind("aap", 0) == 0) {
    const auto [h, w] = parse_grid(name.substr(3), "ablation variant");
    return {name, [h = h, w = w](IrsnConfig& c) {
              c.aap_h = h;
              c.aap_w = w;
            }};
  }
  throw ConfigError("unknown ablation variant '" + name + "'");
}

std::vector<AblationRow> run_ablations(const TrainConfig& base, const AblationOptions& options,
                                       const std::function<void(const std::string&, uint64_t, double)>& on_run) {
  if (options.variants.empty() || options.seeds.empty()) throw ConfigError("ablate: need at least one variant and one seed");
  const auto train_samples = load_split(base.dataset_root, Split::kTrain);
  const auto val_samples = load_split(base.dataset_root, Split::kVal);
  const auto eval_samples = load_split(base.dataset_root, options.eval_split);

  struct Job {
    size_t variant;
    size_t seed;
  };
  std::vector<AblationRow> rows(options.variants.size());
  std::vector<TrainConfig> configs;
  for (size_t v = 0; v < options.variants.size(); ++v) {
    TrainConfig cfg = base;
    ablation_variant(options.variants[v]).apply(cfg.model);
    cfg.validate();
    configs.push_back(cfg);
    rows[v].variant = options.variants[v];
    rows[v].accuracies.assign(options.seeds.size(), 0.0);
    rows[v].parameter_count = IrsnModel(cfg.model).trainable_parameter_count();
  }
  std::vector<Job> jobs;
  for (size_t v = 0; v < configs.size(); ++v) {
    for (size_t s = 0; s < options.seeds.size(); ++s) jobs.push_back({v, s});
  }

  std::mutex mu;
  size_t next = 0;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      Job job{};
      {
        std::lock_guard lock(mu);
        if (next >= jobs.size() || failure) return;
        job = jobs[next++];
      }
      try {
        TrainConfig cfg = configs[job.variant];
        cfg.seed = options.seeds[job.seed];
        const PreparedSplit tr = prepare_split(train_samples, cfg.model);
        const PreparedSplit va = prepare_split(val_samples, cfg.model);
        const PreparedSplit ev = prepare_split(eval_samples, cfg.model);
        TrainResult res = train(cfg, tr, va);
        const double acc = evaluate(*res.model, ev).accuracy;
        std::lock_guard lock(mu);
        rows[job.variant].accuracies[job.seed] = acc;
        if (on_run) on_run(options.variants[job.variant], cfg.seed, acc);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(options.threads, static_cast<int>(jobs.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  double reference = 0.0;
  bool have_reference = false;
  for (AblationRow& row : rows) {
    row.median_accuracy = median(row.accuracies);
    if (row.variant == options.reference) {
      reference = row.median_accuracy;
      have_reference = true;
    }
  }
  if (!have_reference) reference = rows.front().median_accuracy;
  for (AblationRow& row : rows) row.decrement = row.median_accuracy - reference;
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << "variant,accuracy,decrement\n";
  for (const AblationRow& r : rows) os << r.variant << ',' << format_double(r.median_accuracy) << ',' << format_double(r.decrement) << '\n';
  return os.str();
}

}  // namespace irsn
