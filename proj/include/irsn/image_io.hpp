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
#include <stdexcept>
#include <string>
#include <vector>

namespace irsn {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Planar RGB, values in [0,1], layout [3][height][width].
struct Image {
  int64_t height = 0;
  int64_t width = 0;
  std::vector<float> pixels;

  float& at(int channel, int64_t y, int64_t x) { return pixels[static_cast<size_t>((channel * height + y) * width + x)]; }
  float at(int channel, int64_t y, int64_t x) const {
    return pixels[static_cast<size_t>((channel * height + y) * width + x)];
  }
};

struct GrayImage {
  int64_t height = 0;
  int64_t width = 0;
  std::vector<uint8_t> pixels;
};

// Binary PPM (P6, maxval 255). Values are rounded to the nearest 1/255.
void write_ppm(const std::filesystem::path& path, const Image& image);
Image read_ppm(const std::filesystem::path& path);

// Binary PGM (P5, maxval 255).
void write_pgm(const std::filesystem::path& path, const GrayImage& image);
GrayImage read_pgm(const std::filesystem::path& path);

/// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

uint8_t to_byte(float value);

}  // namespace irsn
