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

// irsn: dataset generation, training, evaluation, ablations and attribution.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "irsn/attribution.hpp"
#include "irsn/config.hpp"
#include "irsn/image_io.hpp"
#include "irsn/synth.hpp"
#include "irsn/train.hpp"

namespace fs = std::filesystem;
using namespace irsn;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kIo = 3, kNumerical = 4 };

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out;
  KeyValueConfig flags;  // explicit flags, applied after the file and before --set
};

KeyValueConfig resolve(const Common& c) {
  KeyValueConfig kv;
  if (!c.config_path.empty()) {
    if (!fs::exists(c.config_path)) throw IoError("config file not found: " + c.config_path);
    kv = KeyValueConfig::load(c.config_path);
  }
  kv.merge(c.flags);
  for (const std::string& o : c.overrides) kv.apply_override(o);
  kv.require_known(known_config_keys());
  return kv;
}

void snapshot(const fs::path& out, const KeyValueConfig& kv) {
  fs::create_directories(out);
  write_file_atomic(out / "resolved_config.txt", kv.serialize());
}

int threads_from_env() {
  const char* v = std::getenv("IRSN_THREADS");
  if (!v || !*v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) throw ConfigError(std::string("IRSN_THREADS must be a positive integer, got '") + v + "'");
  return static_cast<int>(n);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

std::vector<uint64_t> parse_seeds(const std::string& text) {
  std::vector<uint64_t> out;
  for (const std::string& s : split_list(text)) {
    try {
      out.push_back(std::stoull(s));
    } catch (const std::exception&) {
      throw ConfigError("ablate.seeds: '" + s + "' is not an integer");
    }
  }
  return out;
}

// --- gen-data ---------------------------------------------------------------

DatasetSpec dataset_spec_from(const KeyValueConfig& kv) {
  DatasetSpec spec;
  spec.variant = kv.get("data.variant", spec.variant);
  spec.num_classes = static_cast<int>(kv.get_int("data.classes", spec.num_classes));
  spec.train_per_class = static_cast<int>(kv.get_int("data.train_per_class", spec.train_per_class));
  spec.val_per_class = static_cast<int>(kv.get_int("data.val_per_class", spec.val_per_class));
  spec.test_per_class = static_cast<int>(kv.get_int("data.test_per_class", spec.test_per_class));
  spec.seed = static_cast<uint64_t>(kv.get_int("data.seed", static_cast<int64_t>(spec.seed)));
  spec.generator.height = kv.get_int("data.height", spec.generator.height);
  spec.generator.width = kv.get_int("data.width", spec.generator.width);
  spec.generator.min_distractors = static_cast<int>(kv.get_int("data.min_distractors", spec.generator.min_distractors));
  spec.generator.max_distractors = static_cast<int>(kv.get_int("data.max_distractors", spec.generator.max_distractors));
  spec.generator.speckle = static_cast<float>(kv.get_double("data.speckle", spec.generator.speckle));
  spec.generator.hue_jitter = static_cast<float>(kv.get_double("data.hue_jitter", spec.generator.hue_jitter));
  for (const std::string& w : split_list(kv.get("data.class_weights", ""))) {
    try {
      spec.class_weights.push_back(std::stod(w));
    } catch (const std::exception&) {
      throw ConfigError("data.class_weights: '" + w + "' is not a number");
    }
  }
  spec.validate();
  return spec;
}

int cmd_gen_data(const Common& c) {
  const KeyValueConfig kv = resolve(c);
  const DatasetSpec spec = dataset_spec_from(kv);
  const fs::path out = c.out;
  const int64_t n = generate_dataset(spec, out);
  snapshot(out, kv);
  std::cout << "wrote " << n << " samples (" << spec.num_classes << " classes, variant " << spec.variant << ") to "
            << out.string() << "\n";
  return kOk;
}

// --- train ------------------------------------------------------------------

int cmd_train(const Common& c) {
  const KeyValueConfig kv = resolve(c);
  const TrainConfig cfg = train_config_from_kv(kv);
  if (cfg.dataset_root.empty()) throw ConfigError("train: no dataset given (use --data or train.dataset)");
  const fs::path out = c.out;
  fs::create_directories(out);
  KeyValueConfig resolved = train_config_to_kv(cfg);
  resolved.merge(kv);
  snapshot(out, resolved);

  const DatasetSpec data = read_dataset_spec(cfg.dataset_root);
  if (data.num_classes != cfg.model.num_classes) {
    throw ConfigError("dataset has " + std::to_string(data.num_classes) + " classes but model.num_classes is " +
                      std::to_string(cfg.model.num_classes));
  }
  TrainResult result = train(cfg, [](const EpochMetrics& m) {
    std::printf("epoch %3d  train_loss %.4f  val_accuracy %.4f\n", m.epoch, m.train_loss, m.val_accuracy);
    std::fflush(stdout);
  });
  write_file_atomic(out / "metrics.csv", metrics_csv(result.history));
  save_checkpoint(*result.model, out / "best.irsn");
  std::printf("best epoch %d, val accuracy %.4f; checkpoint %s\n", result.best_epoch, result.best_val_accuracy,
              (out / "best.irsn").string().c_str());
  return kOk;
}

// --- eval -------------------------------------------------------------------

int cmd_eval(const Common& c) {
  const KeyValueConfig kv = resolve(c);
  const std::string ckpt = kv.get("eval.checkpoint", "");
  const std::string root = kv.get("train.dataset", "");
  if (ckpt.empty()) throw ConfigError("eval: no checkpoint given (use --checkpoint)");
  if (root.empty()) throw ConfigError("eval: no dataset given (use --data)");
  const Split split = parse_split(kv.get("eval.split", "test"));
  auto model = load_checkpoint(ckpt);
  const DatasetSpec data = read_dataset_spec(root);
  if (data.num_classes != model->config().num_classes) {
    throw ConfigError("checkpoint has " + std::to_string(model->config().num_classes) + " classes, dataset has " +
                      std::to_string(data.num_classes));
  }
  const PreparedSplit prepared = prepare_split(load_split(root, split), model->config());
  const EvalReport report = evaluate(*model, prepared);
  const fs::path out = c.out;
  snapshot(out, kv);
  const auto names = class_names(data);
  std::ostringstream summary;
  summary << "split,total,correct,accuracy\n"
          << split_name(split) << ',' << report.total << ',' << report.correct << ',' << format_double(report.accuracy) << '\n';
  write_file_atomic(out / "eval.csv", summary.str());
  write_file_atomic(out / "confusion.csv", confusion_csv(report, names, false));
  write_file_atomic(out / "confusion_normalized.csv", confusion_csv(report, names, true));
  std::cout << split_name(split) << " accuracy " << format_double(report.accuracy) << " (" << report.correct << "/"
            << report.total << ")\n";
  for (size_t k = 0; k < names.size(); ++k) {
    std::printf("  %-12s %.4f\n", names[k].c_str(), report.per_class_accuracy[k]);
  }
  return kOk;
}

// --- ablate -----------------------------------------------------------------

int cmd_ablate(const Common& c) {
  const KeyValueConfig kv = resolve(c);
  const TrainConfig base = train_config_from_kv(kv);
  if (base.dataset_root.empty()) throw ConfigError("ablate: no dataset given (use --data)");
  AblationOptions options;
  if (kv.has("ablate.variants")) options.variants = split_list(kv.get("ablate.variants", ""));
  if (kv.has("ablate.seeds")) options.seeds = parse_seeds(kv.get("ablate.seeds", ""));
  options.eval_split = parse_split(kv.get("ablate.split", "test"));
  options.threads = threads_from_env();
  for (const std::string& v : options.variants) ablation_variant(v);  // fail fast on unknown names
  const fs::path out = c.out;
  KeyValueConfig resolved = train_config_to_kv(base);
  resolved.merge(kv);
  std::string variants, seeds;
  for (const std::string& v : options.variants) variants += (variants.empty() ? "" : ",") + v;
  for (uint64_t s : options.seeds) seeds += (seeds.empty() ? "" : ",") + std::to_string(s);
  resolved.set("ablate.variants", variants);
  resolved.set("ablate.seeds", seeds);
  snapshot(out, resolved);

  std::mutex print_mu;
  const auto rows = run_ablations(base, options, [&](const std::string& variant, uint64_t seed, double acc) {
    std::lock_guard lock(print_mu);
    std::printf("%-14s seed %llu  accuracy %.4f\n", variant.c_str(), static_cast<unsigned long long>(seed), acc);
    std::fflush(stdout);
  });
  write_file_atomic(out / "ablation.csv", ablation_csv(rows));
  std::printf("%-14s %10s %10s %12s\n", "variant", "accuracy", "decrement", "parameters");
  for (const AblationRow& r : rows) {
    std::printf("%-14s %10.4f %+10.4f %12lld\n", r.variant.c_str(), r.median_accuracy, r.decrement,
                static_cast<long long>(r.parameter_count));
  }
  return kOk;
}

// --- attribute --------------------------------------------------------------

int cmd_attribute(const Common& c) {
  const KeyValueConfig kv = resolve(c);
  const std::string ckpt = kv.get("attribute.checkpoint", "");
  const std::string baseline_ckpt = kv.get("attribute.baseline", "");
  const std::string root = kv.get("train.dataset", "");
  if (ckpt.empty() || baseline_ckpt.empty()) throw ConfigError("attribute: need --checkpoint and --baseline");
  if (root.empty()) throw ConfigError("attribute: no dataset given (use --data)");
  const Split split = parse_split(kv.get("attribute.split", "test"));
  const int64_t count = kv.get_int("attribute.count", 20);
  const std::string select = kv.get("attribute.select", "disagree");
  const std::string normalize = kv.get("attribute.normalize", "after");
  if (count < 1) throw ConfigError("attribute.count must be >= 1");
  if (select != "disagree" && select != "all") throw ConfigError("attribute.select must be disagree or all");
  if (normalize != "after" && normalize != "before") throw ConfigError("attribute.normalize must be after or before");
  DiffOptions options;
  options.tap = kv.get("attribute.tap", "dfe");
  options.normalize_before_subtract = normalize == "before";

  auto model = load_checkpoint(ckpt);
  auto baseline = load_checkpoint(baseline_ckpt);
  const DatasetSpec data = read_dataset_spec(root);
  const auto rules = rules_by_name(data.variant);
  std::vector<int> partner(static_cast<size_t>(data.num_classes), -1);
  for (auto [a, b] : confusable_pairs(rules)) {
    if (a < data.num_classes && b < data.num_classes) {
      partner[static_cast<size_t>(a)] = b;
      partner[static_cast<size_t>(b)] = a;
    }
  }
  const auto samples = load_split(root, split);
  const PreparedSplit pm = prepare_split(samples, model->config());
  const PreparedSplit pb = prepare_split(samples, baseline->config());
  const EvalReport em = evaluate(*model, pm), eb = evaluate(*baseline, pb);

  const fs::path out = c.out;
  snapshot(out, kv);
  std::ostringstream table;
  table << "id,label,model_prediction,baseline_prediction,items,inside_mass,outside_mass\n";
  int64_t written = 0, inside_wins = 0;
  for (size_t i = 0; i < samples.size() && written < count; ++i) {
    const int y = samples[i].label;
    if (partner[static_cast<size_t>(y)] < 0) continue;
    if (select == "disagree" && (em.predictions[i] != y || eb.predictions[i] == y)) continue;
    const int64_t idx[] = {static_cast<int64_t>(i)};
    const int target[] = {y};
    const DiffMap diff = grad_cam_diff(*model, *baseline, pm.batch(idx), target, options).front();
    std::vector<ItemMask> masks;
    std::string items;
    for (Item it : discriminative_items(rules[static_cast<size_t>(y)], rules[static_cast<size_t>(partner[static_cast<size_t>(y)])])) {
      masks.push_back(samples[i].masks[static_cast<size_t>(it)]);
      items += (items.empty() ? "" : "+") + std::string(item_name(it));
    }
    const MaskMass mass = positive_mass(diff.values, diff.height, diff.width, masks);
    inside_wins += mass.inside > mass.outside;
    const std::string& id = samples[i].id;
    if (diff.height == samples[i].image.height && diff.width == samples[i].image.width) {
      write_ppm(out / (id + "_overlay.ppm"), diff_overlay(samples[i].image, diff));
    }
    write_file_atomic(out / (id + "_diff.csv"), map_csv(diff.values, diff.height, diff.width));
    table << id << ',' << y << ',' << em.predictions[i] << ',' << eb.predictions[i] << ',' << items << ','
          << format_double(mass.inside) << ',' << format_double(mass.outside) << '\n';
    ++written;
  }
  write_file_atomic(out / "attribution.csv", table.str());
  std::cout << "attributed " << written << " samples; diff mass inside the discriminative items exceeded outside in "
            << inside_wins << "\n";
  if (written == 0) std::cout << "no confusable-pair samples matched the selection\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"irsn: item region-based fashion style classification"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub, bool with_seed, const std::string& seed_key) {
    sub->add_option("--config", common.config_path, "Config file of key = value lines");
    sub->add_option("--set", common.overrides, "Override one config key (key=value); repeatable")->take_all();
    sub->add_option("--out", common.out, "Output directory")->required();
    if (with_seed) {
      sub->add_option_function<uint64_t>("--seed", [&, seed_key](const uint64_t& s) {
        if (seed_key == "ablate.seeds") {
          common.flags.set(seed_key, std::to_string(s) + "," + std::to_string(s + 1) + "," + std::to_string(s + 2));
        } else {
          common.flags.set(seed_key, std::to_string(s));
        }
      }, "Seed");
    }
  };
  auto flag_to_key = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
    sub->add_option_function<std::string>(flag, [&, key](const std::string& v) { common.flags.set(key, v); }, help);
  };

  CLI::App* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  add_common(gen, true, "data.seed");
  flag_to_key(gen, "--variant", "data.variant", "confusable or spatial");
  flag_to_key(gen, "--classes", "data.classes", "Number of style classes");
  flag_to_key(gen, "--weights", "data.class_weights", "Comma-separated per-class count multipliers");
  gen->add_option_function<int>("--per-class", [&](const int& n) {
    if (n < 3) throw ConfigError("--per-class must be at least 3 (one sample per split), got " + std::to_string(n));
    const int train = (4 * n + 3) / 7, val = std::max(1, n / 7);
    common.flags.set("data.train_per_class", static_cast<int64_t>(train));
    common.flags.set("data.val_per_class", static_cast<int64_t>(val));
    common.flags.set("data.test_per_class", static_cast<int64_t>(n - train - val));
  }, "Samples per class across all splits (train:val:test = 4:1:2)");

  CLI::App* tr = app.add_subcommand("train", "Train a model");
  add_common(tr, true, "train.seed");
  flag_to_key(tr, "--data", "train.dataset", "Dataset directory");

  CLI::App* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  add_common(ev, false, "");
  flag_to_key(ev, "--checkpoint", "eval.checkpoint", "Checkpoint file");
  flag_to_key(ev, "--data", "train.dataset", "Dataset directory");
  flag_to_key(ev, "--split", "eval.split", "train, val or test");

  CLI::App* ab = app.add_subcommand("ablate", "Run the ablation table");
  add_common(ab, true, "ablate.seeds");
  flag_to_key(ab, "--data", "train.dataset", "Dataset directory");
  flag_to_key(ab, "--variants", "ablate.variants", "Comma-separated variants");
  flag_to_key(ab, "--split", "ablate.split", "Evaluation split");

  CLI::App* at = app.add_subcommand("attribute", "Grad-CAM differences between two checkpoints");
  add_common(at, false, "");
  flag_to_key(at, "--checkpoint", "attribute.checkpoint", "Item-aware model checkpoint");
  flag_to_key(at, "--baseline", "attribute.baseline", "Baseline checkpoint");
  flag_to_key(at, "--data", "train.dataset", "Dataset directory");
  flag_to_key(at, "--split", "attribute.split", "Split to draw samples from");
  flag_to_key(at, "--count", "attribute.count", "Maximum number of samples");
  flag_to_key(at, "--tap", "attribute.tap", "Feature map tap (dfe or dfe.stageN)");
  at->add_flag_callback("--normalize-before", [&] { common.flags.set("attribute.normalize", "before"); },
                        "Normalize each map before subtracting");

  try {
    app.parse(argc, argv);
    if (gen->parsed()) return cmd_gen_data(common);
    if (tr->parsed()) return cmd_train(common);
    if (ev->parsed()) return cmd_eval(common);
    if (ab->parsed()) return cmd_ablate(common);
    if (at->parsed()) return cmd_attribute(common);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
