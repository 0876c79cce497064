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

#include "irsn/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "irsn/config.hpp"
#include "irsn/ops.hpp"

namespace irsn {

Tensor select_tap(const ForwardResult& forward, const std::string& tap) {
  Tensor t;
  if (tap == "dfe") {
    t = forward.domain_map;
  } else if (tap.rfind("dfe.stage", 0) == 0) {
    size_t used = 0;
    int index = -1;
    try {
      index = std::stoi(tap.substr(9), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != tap.size() - 9 || index < 0 || index >= static_cast<int>(forward.dfe_stages.size())) {
      throw std::invalid_argument("unknown tap '" + tap + "' (model has " + std::to_string(forward.dfe_stages.size()) +
                                  " DFE stages)");
    }
    t = forward.dfe_stages[static_cast<size_t>(index)];
  } else {
    throw std::invalid_argument("tap '" + tap + "' is not a spatial feature map");
  }
  if (!t.defined() || t.rank() != 4) throw std::invalid_argument("tap '" + tap + "' is not a spatial feature map");
  return t;
}

std::vector<float> cam_from_gradients(const Tensor& activations, std::span<const float> gradients) {
  if (activations.rank() != 3) throw ShapeError("cam_from_gradients: expected [C,h,w], got " + shape_str(activations.shape()));
  const int64_t c = activations.shape()[0], hw = activations.shape()[1] * activations.shape()[2];
  if (static_cast<int64_t>(gradients.size()) != c * hw) throw ShapeError("cam_from_gradients: gradient size mismatch");
  const auto a = activations.data();
  std::vector<double> acc(static_cast<size_t>(hw), 0.0);
  for (int64_t k = 0; k < c; ++k) {
    double alpha = 0.0;
    for (int64_t p = 0; p < hw; ++p) alpha += gradients[static_cast<size_t>(k * hw + p)];
    alpha /= static_cast<double>(hw);
    if (alpha == 0.0) continue;
    for (int64_t p = 0; p < hw; ++p) acc[static_cast<size_t>(p)] += alpha * a[static_cast<size_t>(k * hw + p)];
  }
  std::vector<float> out(static_cast<size_t>(hw));
  for (int64_t p = 0; p < hw; ++p) out[static_cast<size_t>(p)] = static_cast<float>(std::max(0.0, acc[static_cast<size_t>(p)]));
  return out;
}

void normalize_max(std::vector<float>& values) {
  float m = 0.0f;
  for (float v : values) m = std::max(m, v);
  if (m > 0.0f) {
    for (float& v : values) v = std::min(1.0f, v / m);
  }
}

void normalize_symmetric(std::vector<float>& values) {
  float m = 0.0f;
  for (float v : values) m = std::max(m, std::abs(v));
  if (m > 0.0f) {
    for (float& v : values) v = std::clamp(v / m, -1.0f, 1.0f);
  }
}

std::vector<float> bilinear_resize(std::span<const float> values, int64_t h, int64_t w, int64_t out_h, int64_t out_w) {
  if (static_cast<int64_t>(values.size()) != h * w || h < 1 || w < 1 || out_h < 1 || out_w < 1) {
    throw ShapeError("bilinear_resize: bad sizes");
  }
  std::vector<float> out(static_cast<size_t>(out_h * out_w));
  auto coord = [](int64_t i, int64_t n_in, int64_t n_out, int64_t& lo, int64_t& hi, double& t) {
    double s = (static_cast<double>(i) + 0.5) * static_cast<double>(n_in) / static_cast<double>(n_out) - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(n_in - 1));
    lo = static_cast<int64_t>(std::floor(s));
    hi = std::min(lo + 1, n_in - 1);
    t = s - static_cast<double>(lo);
  };
  for (int64_t y = 0; y < out_h; ++y) {
    int64_t y0, y1;
    double ty;
    coord(y, h, out_h, y0, y1, ty);
    for (int64_t x = 0; x < out_w; ++x) {
      int64_t x0, x1;
      double tx;
      coord(x, w, out_w, x0, x1, tx);
      auto v = [&](int64_t yy, int64_t xx) { return static_cast<double>(values[static_cast<size_t>(yy * w + xx)]); };
      const double top = v(y0, x0) * (1 - tx) + v(y0, x1) * tx;
      const double bottom = v(y1, x0) * (1 - tx) + v(y1, x1) * tx;
      out[static_cast<size_t>(y * out_w + x)] = static_cast<float>(top * (1 - ty) + bottom * ty);
    }
  }
  return out;
}

namespace {

struct RawCam {
  int64_t h = 0, w = 0;
  std::vector<float> values;
};

std::vector<RawCam> raw_cams(const IrsnModel& model, const ModelInput& input, std::span<const int> targets,
                             const std::string& tap, bool upsample) {
  const int64_t b = input.images.shape()[0];
  if (static_cast<int64_t>(targets.size()) != b) throw ShapeError("grad_cam: one target per batch element required");
  const int k = model.config().num_classes;
  std::vector<float> onehot(static_cast<size_t>(b * k), 0.0f);
  for (int64_t i = 0; i < b; ++i) {
    const int t = targets[static_cast<size_t>(i)];
    if (t < 0 || t >= k) throw std::out_of_range("grad_cam: target class " + std::to_string(t) + " out of range");
    onehot[static_cast<size_t>(i * k + t)] = 1.0f;
  }

  ForwardResult fwd = model.forward(input);
  Tensor a = select_tap(fwd, tap);
  Tensor score = sum(mul(fwd.logits, Tensor::from_data({b, k}, std::move(onehot))));
  if (score.requires_grad()) score.backward();
  for (NamedTensor& p : model.named_parameters()) {
    if (p.tensor.has_grad()) p.tensor.zero_grad();
  }

  const int64_t c = a.shape()[1], h = a.shape()[2], w = a.shape()[3];
  const int64_t per = c * h * w;
  std::vector<float> zeros(static_cast<size_t>(per), 0.0f);
  std::vector<RawCam> out;
  for (int64_t i = 0; i < b; ++i) {
    Tensor sample = Tensor::from_data({c, h, w}, std::vector<float>(a.data().begin() + i * per, a.data().begin() + (i + 1) * per));
    std::span<const float> g = a.has_grad() ? std::span<const float>(a.grad().data() + i * per, static_cast<size_t>(per))
                                            : std::span<const float>(zeros);
    RawCam cam{h, w, cam_from_gradients(sample, g)};
    if (upsample) {
      const int64_t oh = input.images.shape()[2], ow = input.images.shape()[3];
      cam.values = bilinear_resize(cam.values, h, w, oh, ow);
      for (float& v : cam.values) v = std::max(v, 0.0f);
      cam.h = oh;
      cam.w = ow;
    }
    out.push_back(std::move(cam));
  }
  return out;
}

}  // namespace

std::vector<SaliencyMap> grad_cam(const IrsnModel& model, const ModelInput& input, std::span<const int> targets,
                                  const CamOptions& options) {
  std::vector<SaliencyMap> out;
  for (RawCam& raw : raw_cams(model, input, targets, options.tap, options.upsample)) {
    SaliencyMap m;
    m.height = raw.h;
    m.width = raw.w;
    m.values = std::move(raw.values);
    if (options.normalize) normalize_max(m.values);
    m.target = targets[out.size()];
    m.tap = options.tap;
    out.push_back(std::move(m));
  }
  return out;
}

SaliencyMap grad_cam(const IrsnModel& model, const ModelInput& input, int target, const CamOptions& options) {
  if (input.images.shape()[0] != 1) throw ShapeError("grad_cam: single-sample overload needs a batch of 1");
  const int t[] = {target};
  return grad_cam(model, input, t, options).front();
}

std::vector<DiffMap> grad_cam_diff(const IrsnModel& model_a, const IrsnModel& model_b, const ModelInput& input,
                                   std::span<const int> targets, const DiffOptions& options) {
  std::vector<RawCam> a = raw_cams(model_a, input, targets, options.tap, options.upsample);
  std::vector<RawCam> b = raw_cams(model_b, input, targets, options.tap, options.upsample);
  std::vector<DiffMap> out;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].h != b[i].h || a[i].w != b[i].w) {
      throw ShapeError("grad_cam_diff: map resolution mismatch " + std::to_string(a[i].h) + "x" + std::to_string(a[i].w) +
                       " vs " + std::to_string(b[i].h) + "x" + std::to_string(b[i].w));
    }
    if (options.normalize_before_subtract) {
      normalize_max(a[i].values);
      normalize_max(b[i].values);
    }
    DiffMap d;
    d.height = a[i].h;
    d.width = a[i].w;
    d.target = targets[i];
    d.values.resize(a[i].values.size());
    for (size_t p = 0; p < d.values.size(); ++p) d.values[p] = a[i].values[p] - b[i].values[p];
    normalize_symmetric(d.values);
    out.push_back(std::move(d));
  }
  return out;
}

Image diff_overlay(const Image& image, const DiffMap& diff) {
  if (image.height != diff.height || image.width != diff.width) {
    throw ShapeError("diff_overlay: image is " + std::to_string(image.height) + "x" + std::to_string(image.width) + ", map is " +
                     std::to_string(diff.height) + "x" + std::to_string(diff.width));
  }
  Image out = image;
  for (int c = 0; c < 3; ++c) {
    for (int64_t y = 0; y < image.height; ++y) {
      for (int64_t x = 0; x < image.width; ++x) out.at(c, y, x) = image.at(c, y, x) * std::abs(diff.at(y, x));
    }
  }
  return out;
}

std::string map_csv(std::span<const float> values, int64_t height, int64_t width) {
  if (static_cast<int64_t>(values.size()) != height * width) throw ShapeError("map_csv: size mismatch");
  std::ostringstream os;
  for (int64_t y = 0; y < height; ++y) {
    for (int64_t x = 0; x < width; ++x) os << (x ? "," : "") << format_float(values[static_cast<size_t>(y * width + x)]);
    os << '\n';
  }
  return os.str();
}

MaskMass positive_mass(std::span<const float> values, int64_t height, int64_t width, const std::vector<ItemMask>& masks) {
  if (static_cast<int64_t>(values.size()) != height * width) throw ShapeError("positive_mass: size mismatch");
  for (const ItemMask& m : masks) {
    if (m.height != height || m.width != width) throw ShapeError("positive_mass: mask resolution mismatch");
  }
  MaskMass mass;
  for (size_t p = 0; p < values.size(); ++p) {
    const double v = std::max(0.0f, values[p]);
    bool inside = false;
    for (const ItemMask& m : masks) inside = inside || m.full[p] != 0;
    (inside ? mass.inside : mass.outside) += v;
  }
  return mass;
}

}  // namespace irsn
