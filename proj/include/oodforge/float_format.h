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

#ifndef OODFORGE_FLOAT_FORMAT_H_
#define OODFORGE_FLOAT_FORMAT_H_

#include <string>
#include <string_view>
#include <vector>

namespace oodforge {

// Shortest decimal text that parses back to exactly `value`.
std::string FormatDouble(double value);

// Strict parse of the whole field; throws std::invalid_argument otherwise.
double ParseDouble(std::string_view text);
long long ParseInt(std::string_view text);

// Splits one CSV line on commas. No quoting: every field this project
// writes is numeric or a bare identifier.
std::vector<std::string_view> SplitCsv(std::string_view line);

std::string_view Trim(std::string_view text);

}  // namespace oodforge

#endif  // OODFORGE_FLOAT_FORMAT_H_
