// Copyright 2026 The OODForge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OODFORGE_CONFIG_H_
#define OODFORGE_CONFIG_H_

#include <cstddef>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace oodforge {

// Bad configuration: syntax, unknown key, or an invalid value. `key()` is
// empty when the problem is not tied to one key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

// Line-based `key = value` settings with `#` comments and dotted section
// prefixes (`train.beta = 1.0`). Every getter records the effective value,
// so after resolution `resolved()` lists each consumed key with defaults
// expanded, and any key that was set but never consumed is an error.
class Config {
 public:
  static Config Parse(std::string_view text, std::string_view source = "config");
  static Config Load(const std::filesystem::path& path);

  void Set(const std::string& key, const std::string& value);
  bool Has(const std::string& key) const { return values_.contains(key); }

  std::string GetString(const std::string& key, const std::string& fallback);
  double GetDouble(const std::string& key, double fallback);
  std::size_t GetSize(const std::string& key, std::size_t fallback);
  bool GetBool(const std::string& key, bool fallback);
  std::vector<std::size_t> GetSizeList(const std::string& key,
                                       const std::vector<std::size_t>& fallback);

  // Keys that were set but never read, sorted.
  std::vector<std::string> Unconsumed() const;
  // Throws ConfigError naming the first unconsumed key.
  void RequireAllConsumed() const;

  const std::map<std::string, std::string>& resolved() const {
    return resolved_;
  }
  // `key = value` lines for every resolved key; parses back to an
  // equivalent configuration.
  std::string ResolvedText() const;

 private:
  const std::string* Lookup(const std::string& key);

  std::map<std::string, std::string> values_;
  std::map<std::string, std::string> resolved_;
};

}  // namespace oodforge

#endif  // OODFORGE_CONFIG_H_
