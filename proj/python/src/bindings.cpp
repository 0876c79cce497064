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

// Python bindings: dataset generation, training, evaluation and attribution.

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "irsn/attribution.hpp"
#include "irsn/config.hpp"
#include "irsn/model.hpp"
#include "irsn/ops.hpp"
#include "irsn/synth.hpp"
#include "irsn/train.hpp"

namespace py = pybind11;
using namespace irsn;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

Shape shape_of(const py::buffer_info& info) { return Shape(info.shape.begin(), info.shape.end()); }

Tensor to_tensor(const FloatArray& a) {
  const py::buffer_info info = a.request();
  const auto* p = static_cast<const float*>(info.ptr);
  return Tensor::from_data(shape_of(info), std::vector<float>(p, p + info.size));
}

FloatArray to_array(const Tensor& t) {
  FloatArray out(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

FloatArray to_array(std::span<const float> v, std::vector<py::ssize_t> shape) {
  FloatArray out(shape);
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

std::string as_config_value(const py::handle& v) {
  if (py::isinstance<py::bool_>(v)) return v.cast<bool>() ? "true" : "false";
  if (py::isinstance<py::str>(v)) return v.cast<std::string>();
  if (py::isinstance<py::float_>(v)) return format_double(v.cast<double>());
  if (py::isinstance<py::int_>(v)) return std::to_string(v.cast<int64_t>());
  if (py::isinstance<py::list>(v) || py::isinstance<py::tuple>(v)) {
    std::string out;
    for (const py::handle& e : v) out += (out.empty() ? "" : ",") + as_config_value(e);
    return out;
  }
  throw ConfigError("unsupported config value type: " + std::string(py::str(py::type::of(v))));
}

KeyValueConfig kv_from(const py::dict& d) {
  KeyValueConfig kv;
  for (const auto& [k, v] : d) kv.set(k.cast<std::string>(), as_config_value(v));
  kv.require_known(known_config_keys());
  return kv;
}

py::dict dict_from(const KeyValueConfig& kv) {
  py::dict d;
  for (const auto& [k, v] : kv.entries()) d[py::str(k)] = v;
  return d;
}

Split split_from(const std::string& name) { return parse_split(name); }

py::dict masks_dict(const ItemMasks& masks) {
  py::dict d;
  for (const ItemMask& m : masks) {
    py::array_t<uint8_t> a({m.height, m.width});
    std::copy(m.full.begin(), m.full.end(), a.mutable_data());
    d[py::str(std::string(item_name(m.item)))] = a;
  }
  return d;
}

py::dict report_dict(const EvalReport& r) {
  py::dict d;
  d["accuracy"] = r.accuracy;
  d["correct"] = r.correct;
  d["total"] = r.total;
  d["per_class_accuracy"] = r.per_class_accuracy;
  py::array_t<int64_t> conf({r.num_classes, r.num_classes});
  auto* p = conf.mutable_data();
  for (const auto& row : r.confusion) p = std::copy(row.begin(), row.end(), p);
  d["confusion"] = conf;
  d["predictions"] = r.predictions;
  return d;
}

FloatArray logits_of(const IrsnModel& model, const std::vector<SyntheticSample>& samples, int batch_size) {
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  const int64_t k = model.config().num_classes;
  std::vector<float> out;
  {
    py::gil_scoped_release release;
    const PreparedSplit split = prepare_split(samples, model.config());
    NoGradGuard no_grad;
    std::vector<int64_t> idx;
    for (int64_t start = 0; start < split.size; start += batch_size) {
      idx.resize(static_cast<size_t>(std::min<int64_t>(batch_size, split.size - start)));
      std::iota(idx.begin(), idx.end(), start);
      const Tensor logits = model.forward(split.batch(idx)).logits;
      out.insert(out.end(), logits.data().begin(), logits.data().end());
    }
  }
  return to_array(out, {static_cast<py::ssize_t>(samples.size()), k});
}

DiffOptions diff_options(const std::string& tap, bool normalize_before_subtract) {
  DiffOptions o;
  o.tap = tap;
  o.normalize_before_subtract = normalize_before_subtract;
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Item region-based style classification: C++ core bindings";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<CheckpointError>(m, "CheckpointError", PyExc_RuntimeError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.attr("ITEMS") = py::make_tuple("head", "top", "bottom", "shoes");

  // Ops on plain float32 arrays.
  m.def("item_region_pool", [](const FloatArray& d, const FloatArray& r) {
    NoGradGuard g;
    return to_array(item_region_pool(to_tensor(d), to_tensor(r)));
  }, py::arg("domain_map"), py::arg("region_map"));
  m.def("adaptive_avg_pool2d", [](const FloatArray& x, int64_t out_h, int64_t out_w) {
    NoGradGuard g;
    return to_array(adaptive_avg_pool2d(to_tensor(x), out_h, out_w));
  }, py::arg("x"), py::arg("out_h"), py::arg("out_w"));
  m.def("cross_entropy_label_smooth", [](const FloatArray& logits, const std::vector<int>& labels, float eps) {
    NoGradGuard g;
    return cross_entropy_label_smooth(to_tensor(logits), labels, eps).item();
  }, py::arg("logits"), py::arg("labels"), py::arg("eps") = 0.1f);
  m.def("downsample_mask", [](py::array_t<uint8_t, py::array::c_style | py::array::forcecast> mask, int64_t h, int64_t w,
                              const std::string& mode) {
    const py::buffer_info info = mask.request();
    if (info.ndim != 2) throw ShapeError("downsample_mask: mask must be 2-D");
    ItemMask mk;
    mk.height = info.shape[0];
    mk.width = info.shape[1];
    const auto* p = static_cast<const uint8_t*>(info.ptr);
    mk.full.assign(p, p + info.size);
    if (mode != "area" && mode != "nearest") throw ConfigError("downsample_mode must be area or nearest, got '" + mode + "'");
    return to_array(downsample_mask(mk, h, w, mode == "area" ? MaskDownsample::kArea : MaskDownsample::kNearest), {h, w});
  }, py::arg("mask"), py::arg("h"), py::arg("w"), py::arg("mode") = "area");

  // Synthetic data.
  py::class_<DatasetSpec>(m, "DatasetSpec")
      .def(py::init<>())
      .def_readwrite("variant", &DatasetSpec::variant)
      .def_readwrite("num_classes", &DatasetSpec::num_classes)
      .def_readwrite("train_per_class", &DatasetSpec::train_per_class)
      .def_readwrite("val_per_class", &DatasetSpec::val_per_class)
      .def_readwrite("test_per_class", &DatasetSpec::test_per_class)
      .def_readwrite("class_weights", &DatasetSpec::class_weights)
      .def_readwrite("seed", &DatasetSpec::seed)
      .def_property(
          "height", [](const DatasetSpec& s) { return s.generator.height; },
          [](DatasetSpec& s, int64_t v) { s.generator.height = v; })
      .def_property(
          "width", [](const DatasetSpec& s) { return s.generator.width; },
          [](DatasetSpec& s, int64_t v) { s.generator.width = v; })
      .def("count", [](const DatasetSpec& s, const std::string& split, int label) { return s.count(split_from(split), label); })
      .def("validate", &DatasetSpec::validate)
      .def("class_names", [](const DatasetSpec& s) { return class_names(s); });

  py::class_<SyntheticSample>(m, "Sample")
      .def_readonly("id", &SyntheticSample::id)
      .def_readonly("label", &SyntheticSample::label)
      .def_readonly("style_name", &SyntheticSample::style_name)
      .def_property_readonly("image", [](const SyntheticSample& s) {
        return to_array(s.image.pixels, {3, s.image.height, s.image.width});
      })
      .def_property_readonly("masks", [](const SyntheticSample& s) { return masks_dict(s.masks); })
      .def("__repr__", [](const SyntheticSample& s) { return "<Sample " + s.id + " " + s.style_name + ">"; });

  m.def("generate_split", [](const DatasetSpec& spec, const std::string& split) {
    spec.validate();
    return generate_split(spec, split_from(split));
  }, py::arg("spec"), py::arg("split"));
  m.def("generate_dataset", &generate_dataset, py::arg("spec"), py::arg("root"),
        py::call_guard<py::gil_scoped_release>());
  m.def("load_split", [](const std::filesystem::path& root, const std::string& split) {
    return load_split(root, split_from(split));
  }, py::arg("root"), py::arg("split"));
  m.def("read_dataset_spec", &read_dataset_spec, py::arg("root"));

  // Model.
  py::class_<IrsnModel, std::shared_ptr<IrsnModel>>(m, "Model")
      .def(py::init([](const py::dict& overrides) {
        const TrainConfig cfg = train_config_from_kv(kv_from(overrides));
        return std::make_shared<IrsnModel>(cfg.model);
      }), py::arg("config") = py::dict())
      .def_static("load", [](const std::filesystem::path& path) {
        return std::shared_ptr<IrsnModel>(load_checkpoint(path));
      }, py::arg("path"))
      .def("save", [](const IrsnModel& model, const std::filesystem::path& path) { save_checkpoint(model, path); },
           py::arg("path"))
      .def("to_bytes", [](const IrsnModel& model) { return py::bytes(serialize_checkpoint(model)); })
      .def_static("from_bytes", [](const py::bytes& b) { return std::shared_ptr<IrsnModel>(parse_checkpoint(b)); })
      .def_property_readonly("config", [](const IrsnModel& model) { return dict_from(model_config_to_kv(model.config())); })
      .def_property_readonly("num_classes", [](const IrsnModel& model) { return model.config().num_classes; })
      .def_property_readonly("parameter_count", &IrsnModel::trainable_parameter_count)
      .def("checksum", &parameter_checksum, py::arg("prefix") = "")
      .def("logits", &logits_of, py::arg("samples"), py::arg("batch_size") = 64)
      .def("predict", [](const IrsnModel& model, const std::vector<SyntheticSample>& samples) {
        py::gil_scoped_release release;
        const PreparedSplit split = prepare_split(samples, model.config());
        NoGradGuard g;
        std::vector<int64_t> idx(static_cast<size_t>(split.size));
        std::iota(idx.begin(), idx.end(), 0);
        return split.size ? predict_styles(model.forward(split.batch(idx)).logits) : std::vector<int>{};
      }, py::arg("samples"));

  // Training and evaluation.
  py::class_<EpochMetrics>(m, "EpochMetrics")
      .def_readonly("epoch", &EpochMetrics::epoch)
      .def_readonly("train_loss", &EpochMetrics::train_loss)
      .def_readonly("val_accuracy", &EpochMetrics::val_accuracy)
      .def("__repr__", [](const EpochMetrics& e) {
        return "<EpochMetrics epoch=" + std::to_string(e.epoch) + " loss=" + format_double(e.train_loss) +
               " val=" + format_double(e.val_accuracy) + ">";
      });

  m.def("train", [](const py::dict& config, const std::vector<SyntheticSample>& train_samples,
                    const std::vector<SyntheticSample>& val_samples, const py::object& on_epoch) {
    const TrainConfig cfg = train_config_from_kv(kv_from(config));
    cfg.validate();
    EpochCallback cb;
    if (!on_epoch.is_none()) {
      cb = [&on_epoch](const EpochMetrics& e) {
        py::gil_scoped_acquire acquire;
        on_epoch(EpochMetrics(e));  // a copy: Python may keep it
      };
    }
    TrainResult r;
    {
      py::gil_scoped_release release;
      const PreparedSplit tr = prepare_split(train_samples, cfg.model);
      const PreparedSplit va = prepare_split(val_samples, cfg.model);
      r = train(cfg, tr, va, cb);
    }
    py::dict out;
    out["model"] = std::shared_ptr<IrsnModel>(std::move(r.model));
    out["history"] = r.history;
    out["best_epoch"] = r.best_epoch;
    out["best_val_accuracy"] = r.best_val_accuracy;
    out["metrics_csv"] = metrics_csv(r.history);
    return out;
  }, py::arg("config"), py::arg("train"), py::arg("val"), py::arg("on_epoch") = py::none());

  m.def("evaluate", [](const IrsnModel& model, const std::vector<SyntheticSample>& samples) {
    EvalReport r;
    {
      py::gil_scoped_release release;
      r = evaluate(model, prepare_split(samples, model.config()));
    }
    return report_dict(r);
  }, py::arg("model"), py::arg("samples"));

  m.def("config_keys", [] { return known_config_keys(); });
  m.def("default_config", [] { return dict_from(train_config_to_kv(TrainConfig{})); });

  // Attribution.
  m.def("grad_cam", [](const IrsnModel& model, const SyntheticSample& sample, int target, const std::string& tap) {
    const PreparedSplit split = prepare_split({sample}, model.config());
    const int64_t zero = 0;
    CamOptions o;
    o.tap = tap;
    const SaliencyMap s = grad_cam(model, split.batch({&zero, 1}), target, o);
    return to_array(s.values, {s.height, s.width});
  }, py::arg("model"), py::arg("sample"), py::arg("target"), py::arg("tap") = "dfe");
  m.def("grad_cam_diff", [](const IrsnModel& a, const IrsnModel& b, const SyntheticSample& sample, int target,
                            const std::string& tap, bool normalize_before_subtract) {
    const PreparedSplit split = prepare_split({sample}, a.config());
    const int64_t zero = 0;
    const std::vector<DiffMap> d =
        grad_cam_diff(a, b, split.batch({&zero, 1}), std::vector<int>{target}, diff_options(tap, normalize_before_subtract));
    return to_array(d[0].values, {d[0].height, d[0].width});
  }, py::arg("model"), py::arg("baseline"), py::arg("sample"), py::arg("target"), py::arg("tap") = "dfe",
     py::arg("normalize_before_subtract") = false);
}
