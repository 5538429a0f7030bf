/*
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once
// Tab-separated line codec. Fields escape tab, newline and backslash as
// \t, \n and \\; there is no header row.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kfusion::tsv {

std::string escape(std::string_view field);
std::string unescape(std::string_view field);

// Splits on raw tabs and unescapes every field.
std::vector<std::string> split_line(std::string_view line);

// Escapes and joins with tabs, no trailing newline.
std::string join_line(const std::vector<std::string>& fields);

// Whole file contents; gzip input (magic 1f 8b) is inflated transparently.
// Throws IngestError when the file cannot be read.
std::string read_file(const std::string& path);

// Calls fn(line) for every line, with any trailing '\r' removed. A final
// empty segment after the last newline is not reported.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  while (!text.empty()) {
    auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(line);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
}

// Shortest decimal that parses back to the same double.
std::string format_double(double v);
std::string format_fixed(double v, int decimals);
std::optional<double> parse_double(std::string_view s);

}  // namespace kfusion::tsv
