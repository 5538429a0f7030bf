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
// Domain types shared by every stage of the fusion engine: triples, data
// items, extraction records, provenance keys and the per-provenance accuracy
// table.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kfusion {

// Base for all recoverable library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input data: unreadable files, records that cannot form a provenance.
class IngestError : public Error {
 public:
  using Error::Error;
};

struct Triple {
  std::string subject;
  std::string predicate;
  std::string object;

  auto operator<=>(const Triple&) const = default;
  bool operator==(const Triple&) const = default;
};

// (subject, predicate): all triples sharing it compete for the single truth.
struct DataItem {
  std::string subject;
  std::string predicate;

  auto operator<=>(const DataItem&) const = default;
  bool operator==(const DataItem&) const = default;
};

struct ExtractionRecord {
  Triple triple;
  std::string extractor;
  std::string url;
  std::string pattern;
  std::optional<double> confidence;

  bool operator==(const ExtractionRecord&) const = default;
};

enum class Granularity {
  kExtractorUrl,
  kExtractorSite,
  kExtractorSitePredicate,
  kExtractorSitePredicatePattern,
};

// Command-line spelling: extractor-url, extractor-site, extractor-site-pred,
// extractor-site-pred-pattern.
std::string_view to_string(Granularity g);
std::optional<Granularity> parse_granularity(std::string_view name);

// Source identity used as the fusion "data source". The number of parts
// depends on the granularity it was built with.
struct ProvenanceKey {
  std::vector<std::string> parts;

  auto operator<=>(const ProvenanceKey&) const = default;
  bool operator==(const ProvenanceKey&) const = default;

  // Parts joined with '|', for logs and diagnostics only.
  std::string display() const;
};

struct AccuracyEntry {
  double accuracy = 0.0;
  std::uint64_t support = 0;  // distinct extracted triples
  bool is_default = true;

  bool operator==(const AccuracyEntry&) const = default;
};

using AccuracyTable = std::map<ProvenanceKey, AccuracyEntry>;

struct FusionRow {
  Triple triple;
  std::optional<double> probability;
  std::uint32_t provenance_count = 0;
  std::uint32_t extractor_count = 0;
  std::uint32_t source_count = 0;

  bool operator==(const FusionRow&) const = default;
};

// One row per unique triple, sorted by triple.
struct FusionResult {
  std::vector<FusionRow> rows;
  double coverage = 0.0;
};

DataItem data_item(const Triple& t);

// Host prefix of a URL: scheme stripped, cut at the first '/', lowercased.
// Throws IngestError on an empty url.
std::string site_of(std::string_view url);

ProvenanceKey provenance_key(const ExtractionRecord& r, Granularity g);

struct TripleHash {
  std::size_t operator()(const Triple& t) const noexcept;
};

struct DataItemHash {
  std::size_t operator()(const DataItem& d) const noexcept;
};

}  // namespace kfusion
