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

#include "oodforge/config.h"

#include <cctype>
#include <fstream>
#include <sstream>

#include "oodforge/float_format.h"

namespace oodforge {

namespace {

bool ValidKey(std::string_view key) {
  if (key.empty() || key.front() == '.' || key.back() == '.') return false;
  for (char c : key) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) {
      return false;
    }
  }
  return key.find("..") == std::string_view::npos;
}

}  // namespace

Config Config::Parse(std::string_view text, std::string_view source) {
  Config config;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = Trim(line);
    if (line.empty()) continue;
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("", where + ": expected 'key = value'");
    }
    const std::string key(Trim(line.substr(0, eq)));
    const std::string value(Trim(line.substr(eq + 1)));
    if (!ValidKey(key)) {
      throw ConfigError(key, where + ": invalid key '" + key + "'");
    }
    if (config.values_.contains(key)) {
      throw ConfigError(key, where + ": duplicate key '" + key + "'");
    }
    config.values_[key] = value;
  }
  return config;
}

Config Config::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return Parse(buf.str(), path.string());
}

void Config::Set(const std::string& key, const std::string& value) {
  if (!ValidKey(key)) throw ConfigError(key, "invalid key '" + key + "'");
  values_[key] = value;
}

const std::string* Config::Lookup(const std::string& key) {
  auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

std::string Config::GetString(const std::string& key,
                              const std::string& fallback) {
  const std::string* v = Lookup(key);
  std::string value = v != nullptr ? *v : fallback;
  resolved_[key] = value;
  return value;
}

double Config::GetDouble(const std::string& key, double fallback) {
  const std::string* v = Lookup(key);
  double value = fallback;
  if (v != nullptr) {
    try {
      value = ParseDouble(*v);
    } catch (const std::invalid_argument&) {
      throw ConfigError(key, key + ": expected a number, got '" + *v + "'");
    }
  }
  resolved_[key] = FormatDouble(value);
  return value;
}

std::size_t Config::GetSize(const std::string& key, std::size_t fallback) {
  const std::string* v = Lookup(key);
  std::size_t value = fallback;
  if (v != nullptr) {
    long long parsed = -1;
    try {
      parsed = ParseInt(*v);
    } catch (const std::invalid_argument&) {
    }
    if (parsed < 0) {
      throw ConfigError(key, key + ": expected a non-negative integer, got '" +
                                 *v + "'");
    }
    value = static_cast<std::size_t>(parsed);
  }
  resolved_[key] = std::to_string(value);
  return value;
}

bool Config::GetBool(const std::string& key, bool fallback) {
  const std::string* v = Lookup(key);
  bool value = fallback;
  if (v != nullptr) {
    if (*v == "true" || *v == "1") {
      value = true;
    } else if (*v == "false" || *v == "0") {
      value = false;
    } else {
      throw ConfigError(key, key + ": expected true or false, got '" + *v + "'");
    }
  }
  resolved_[key] = value ? "true" : "false";
  return value;
}

std::vector<std::size_t> Config::GetSizeList(
    const std::string& key, const std::vector<std::size_t>& fallback) {
  const std::string* v = Lookup(key);
  std::vector<std::size_t> value = fallback;
  if (v != nullptr) {
    value.clear();
    if (!Trim(*v).empty()) {
      for (std::string_view field : SplitCsv(*v)) {
        long long parsed = 0;
        try {
          parsed = ParseInt(field);
        } catch (const std::invalid_argument&) {
          parsed = 0;
        }
        if (parsed <= 0) {
          throw ConfigError(key, key + ": expected positive integers, got '" +
                                     *v + "'");
        }
        value.push_back(static_cast<std::size_t>(parsed));
      }
    }
  }
  std::string text;
  for (std::size_t i = 0; i < value.size(); ++i) {
    if (i > 0) text += ",";
    text += std::to_string(value[i]);
  }
  resolved_[key] = text;
  return value;
}

std::vector<std::string> Config::Unconsumed() const {
  std::vector<std::string> keys;
  for (const auto& [key, value] : values_) {
    if (!resolved_.contains(key)) keys.push_back(key);
  }
  return keys;
}

void Config::RequireAllConsumed() const {
  const auto keys = Unconsumed();
  if (!keys.empty()) {
    throw ConfigError(keys.front(), "unknown config key '" + keys.front() + "'");
  }
}

std::string Config::ResolvedText() const {
  std::string text;
  for (const auto& [key, value] : resolved_) {
    text += key + " = " + value + "\n";
  }
  return text;
}

}  // namespace oodforge
