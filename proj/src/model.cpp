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

#include "kfusion/model.hpp"

#include <algorithm>
#include <cctype>

#include "kfusion/hash.hpp"

namespace kfusion {

namespace {

bool starts_with_nocase(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[i])) != prefix[i]) return false;
  }
  return true;
}

}  // namespace

std::string_view to_string(Granularity g) {
  switch (g) {
    case Granularity::kExtractorUrl:
      return "extractor-url";
    case Granularity::kExtractorSite:
      return "extractor-site";
    case Granularity::kExtractorSitePredicate:
      return "extractor-site-pred";
    case Granularity::kExtractorSitePredicatePattern:
      return "extractor-site-pred-pattern";
  }
  return "unknown";
}

std::optional<Granularity> parse_granularity(std::string_view name) {
  for (auto g : {Granularity::kExtractorUrl, Granularity::kExtractorSite,
                 Granularity::kExtractorSitePredicate,
                 Granularity::kExtractorSitePredicatePattern}) {
    if (to_string(g) == name) return g;
  }
  return std::nullopt;
}

std::string ProvenanceKey::display() const {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += '|';
    out += parts[i];
  }
  return out;
}

DataItem data_item(const Triple& t) { return {t.subject, t.predicate}; }

std::string site_of(std::string_view url) {
  if (url.empty()) throw IngestError("empty url");
  if (starts_with_nocase(url, "http://")) {
    url.remove_prefix(7);
  } else if (starts_with_nocase(url, "https://")) {
    url.remove_prefix(8);
  }
  url = url.substr(0, url.find('/'));
  if (url.empty()) throw IngestError("url has no host");
  std::string host(url);
  std::transform(host.begin(), host.end(), host.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return host;
}

ProvenanceKey provenance_key(const ExtractionRecord& r, Granularity g) {
  ProvenanceKey key;
  key.parts.reserve(4);
  key.parts.push_back(r.extractor);
  if (g == Granularity::kExtractorUrl) {
    key.parts.push_back(r.url);
    return key;
  }
  key.parts.push_back(site_of(r.url));
  if (g == Granularity::kExtractorSite) return key;
  key.parts.push_back(r.triple.predicate);
  if (g == Granularity::kExtractorSitePredicatePattern) key.parts.push_back(r.pattern);
  return key;
}

std::size_t TripleHash::operator()(const Triple& t) const noexcept {
  auto h = hash_bytes(t.subject);
  h = hash_combine(h, hash_bytes(t.predicate));
  return hash_combine(h, hash_bytes(t.object));
}

std::size_t DataItemHash::operator()(const DataItem& d) const noexcept {
  return hash_combine(hash_bytes(d.subject), hash_bytes(d.predicate));
}

}  // namespace kfusion
