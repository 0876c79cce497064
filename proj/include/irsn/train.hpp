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

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "irsn/config.hpp"
#include "irsn/model.hpp"
#include "irsn/synth.hpp"

namespace irsn {

struct TrainConfig {
  int epochs = 20;
  int batch_size = 16;
  float learning_rate = 1e-2f;
  float momentum = 0.9f;
  float label_smoothing = 0.1f;
  uint64_t seed = 1;  // drives model init and shuffle order
  std::string dataset_root;
  IrsnConfig model;

  void validate() const;
};

/// A split held in memory, with everything the model needs precomputed:
/// downsampled item maps, presence gates and the frozen GFE output.
struct PreparedSplit {
  int64_t size = 0;
  int64_t height = 0, width = 0;
  std::vector<float> images;  // [N,3,H,W]
  std::vector<int> labels;
  std::vector<std::string> ids;
  std::vector<ItemMasks> masks;
  int64_t map_h = 0, map_w = 0;
  std::array<std::vector<float>, kNumItems> item_maps;  // [N,1,h,w]
  std::array<std::vector<float>, kNumItems> presence;   // [N]
  int64_t gfe_dim = 0;
  std::vector<float> general_features;  // [N,D], empty if not computed

  ModelInput batch(std::span<const int64_t> indices) const;
  Tensor images_of(std::span<const int64_t> indices) const;
};

PreparedSplit prepare_split(const std::vector<SyntheticSample>& samples, const IrsnConfig& model_config);

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
};

struct EvalReport {
  int num_classes = 0;
  int64_t total = 0;
  int64_t correct = 0;
  double accuracy = 0.0;
  std::vector<double> per_class_accuracy;
  std::vector<std::vector<int64_t>> confusion;  // rows true, columns predicted
  std::vector<int> predictions;

  std::vector<std::vector<double>> row_normalized() const;
};

struct TrainResult {
  std::unique_ptr<IrsnModel> model;  // best-validation weights
  std::vector<EpochMetrics> history;
  int best_epoch = 0;
  double best_val_accuracy = -1.0;
  double first_batch_loss = 0.0;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

TrainResult train(const TrainConfig& config, const PreparedSplit& train_set, const PreparedSplit& val_set,
                  const EpochCallback& on_epoch = {});
/// Loads the dataset named by config.dataset_root and trains.
TrainResult train(const TrainConfig& config, const EpochCallback& on_epoch = {});

EvalReport evaluate(const IrsnModel& model, const PreparedSplit& split, int batch_size = 64);
/// Mean label-smoothed loss without updates.
double evaluate_loss(const IrsnModel& model, const PreparedSplit& split, float label_smoothing, int batch_size = 64);

// Checkpoint: "IRSN", u32 version, u32 config length + config text, u32
// tensor count, then per tensor u16 name length + name, u8 rank, u32 dims,
// raw f32 payload; all integers little-endian.
inline constexpr uint32_t kCheckpointVersion = 1;
std::string serialize_checkpoint(const IrsnModel& model);
std::unique_ptr<IrsnModel> parse_checkpoint(const std::string& bytes);
void save_checkpoint(const IrsnModel& model, const std::filesystem::path& path);
std::unique_ptr<IrsnModel> load_checkpoint(const std::filesystem::path& path);

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Copies parameter values between two models of the same architecture.
void copy_parameters(const IrsnModel& from, IrsnModel& to);
/// FNV-1a over the bytes of the named parameters with the given prefix.
uint64_t parameter_checksum(const IrsnModel& model, const std::string& prefix);

// Config plumbing (keys are "model.*" and "train.*").
KeyValueConfig model_config_to_kv(const IrsnConfig& config);
IrsnConfig model_config_from_kv(const KeyValueConfig& kv, IrsnConfig base = {});
KeyValueConfig train_config_to_kv(const TrainConfig& config);
TrainConfig train_config_from_kv(const KeyValueConfig& kv, TrainConfig base = {});
const std::set<std::string>& known_config_keys();

// CSV writers.
std::string metrics_csv(const std::vector<EpochMetrics>& history);
std::string confusion_csv(const EvalReport& report, const std::vector<std::string>& class_names, bool normalized);

struct AblationVariant {
  std::string name;
  std::function<void(IrsnConfig&)> apply;
};

/// Known names: full, gap, no-irp, no-gfe, plain-concat, aap5x3, aap5x1,
/// aap1x1, aap4x2.
AblationVariant ablation_variant(const std::string& name);

struct AblationRow {
  std::string variant;
  std::vector<double> accuracies;  // one per seed
  double median_accuracy = 0.0;
  double decrement = 0.0;          // median(variant) - median(reference)
  int64_t parameter_count = 0;
};

struct AblationOptions {
  std::vector<std::string> variants{"full", "gap", "no-irp", "no-gfe"};
  std::vector<uint64_t> seeds{1, 2, 3};
  std::string reference = "full";
  int threads = 1;
  Split eval_split = Split::kTest;
};

/// Trains every (variant, seed) on identical data and reports median test
/// accuracy per variant, with decrements relative to the reference variant.
std::vector<AblationRow> run_ablations(const TrainConfig& base, const AblationOptions& options,
                                       const std::function<void(const std::string&, uint64_t, double)>& on_run = {});
std::string ablation_csv(const std::vector<AblationRow>& rows);

double median(std::vector<double> values);

}  // namespace irsn
