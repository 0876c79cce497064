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

#include "irsn/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace irsn {

uint8_t to_byte(float value) {
  const float clamped = std::clamp(value, 0.0f, 1.0f);
  return static_cast<uint8_t>(std::lround(clamped * 255.0f));
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

struct NetpbmHeader {
  int64_t width = 0, height = 0, maxval = 0;
  size_t payload_offset = 0;
};

NetpbmHeader parse_header(const std::string& bytes, const char* magic, const std::filesystem::path& path) {
  if (bytes.size() < 2 || bytes.compare(0, 2, magic) != 0) {
    throw IoError(path.string() + ": expected " + magic + " header");
  }
  size_t pos = 2;
  int64_t fields[3] = {0, 0, 0};
  for (int64_t& field : fields) {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    size_t start = pos;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw IoError(path.string() + ": malformed header at offset " + std::to_string(start));
    field = std::stoll(bytes.substr(start, pos - start));
  }
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw IoError(path.string() + ": malformed header at offset " + std::to_string(pos));
  }
  NetpbmHeader h{fields[0], fields[1], fields[2], pos + 1};
  if (h.width < 1 || h.height < 1 || h.maxval != 255) throw IoError(path.string() + ": unsupported dimensions or maxval");
  return h;
}

}  // namespace

void write_ppm(const std::filesystem::path& path, const Image& image) {
  std::string bytes = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  bytes.reserve(bytes.size() + static_cast<size_t>(3 * image.width * image.height));
  for (int64_t y = 0; y < image.height; ++y) {
    for (int64_t x = 0; x < image.width; ++x) {
      for (int c = 0; c < 3; ++c) bytes.push_back(static_cast<char>(to_byte(image.at(c, y, x))));
    }
  }
  write_file_atomic(path, bytes);
}

Image read_ppm(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  const NetpbmHeader h = parse_header(bytes, "P6", path);
  const size_t need = static_cast<size_t>(3 * h.width * h.height);
  if (bytes.size() - h.payload_offset < need) throw IoError(path.string() + ": truncated pixel data");
  Image img{h.height, h.width, std::vector<float>(need)};
  const auto* p = reinterpret_cast<const uint8_t*>(bytes.data() + h.payload_offset);
  for (int64_t y = 0; y < h.height; ++y) {
    for (int64_t x = 0; x < h.width; ++x) {
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = static_cast<float>(*p++) / 255.0f;
    }
  }
  return img;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  std::string bytes = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  bytes.append(reinterpret_cast<const char*>(image.pixels.data()), image.pixels.size());
  write_file_atomic(path, bytes);
}

GrayImage read_pgm(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  const NetpbmHeader h = parse_header(bytes, "P5", path);
  const size_t need = static_cast<size_t>(h.width * h.height);
  if (bytes.size() - h.payload_offset < need) throw IoError(path.string() + ": truncated pixel data");
  GrayImage img{h.height, h.width, {}};
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(h.payload_offset),
                    bytes.begin() + static_cast<std::ptrdiff_t>(h.payload_offset + need));
  return img;
}

}  // namespace irsn
