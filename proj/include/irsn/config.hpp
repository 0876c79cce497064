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
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

namespace irsn {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Flat "key = value" text, one entry per line; '#' starts a comment.
/// Sections are spelled with dots in the key (model.aap = 5x3).
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::filesystem::path& path);

  /// Keys in sorted order, so equal configs serialize to equal bytes.
  std::string serialize() const;

  void set(const std::string& key, const std::string& value) { entries_[key] = value; }
  void set(const std::string& key, int64_t value) { entries_[key] = std::to_string(value); }
  void set(const std::string& key, double value);
  void set_bool(const std::string& key, bool value) { entries_[key] = value ? "true" : "false"; }
  /// Applies "key=value" (as from --set).
  void apply_override(std::string_view assignment);
  void merge(const KeyValueConfig& other);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  std::string get(const std::string& key, const std::string& fallback) const;
  int64_t get_int(const std::string& key, int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Throws ConfigError naming the first key not in `allowed`.
  void require_known(const std::set<std::string>& allowed) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

/// Shortest decimal text that parses back to the same float.
std::string format_float(float value);
std::string format_double(double value);

}  // namespace irsn
