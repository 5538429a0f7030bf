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
// Synthetic extraction corpus with known ground truth.
//
// Data items are (e<s>, p<k>) pairs with candidate objects v0..v<D>, where D
// is value_domain_size: with one truth per item there are exactly D false
// values. Web sources (pages grouped into sites) claim one value for each
// item they cover, the true one with their accuracy and otherwise a uniform
// false one. Extractors read the pages they cover and may corrupt a claim
// in three independent ways:
//   triple identification  object replaced by an out-of-domain string
//   entity linkage         subject replaced by another entity
//   predicate linkage      predicate replaced by a sibling predicate
// The result is deterministic in the seed.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "kfusion/ingest.hpp"
#include "kfusion/model.hpp"

namespace kfusion {

struct BetaParams {
  double alpha = 1.0;
  double beta = 1.0;
};

struct ExtractorProfile {
  // Default error mix: 30% of extractions wrong, split 44/44/20 between the
  // three classes (classes may co-occur).
  double triple_error = 0.3 * 0.44;
  double entity_error = 0.3 * 0.44;
  double predicate_error = 0.3 * 0.20;
  int n_patterns = 4;
  BetaParams confidence_correct{5.0, 2.0};
  BetaParams confidence_wrong{2.0, 5.0};
  double missing_confidence = 0.005;
};

struct SynthConfig {
  std::size_t n_items = 10000;
  std::size_t n_predicates = 10;
  std::size_t n_sources = 1000;
  std::size_t n_sites = 100;
  std::size_t n_extractors = 4;
  BetaParams source_accuracy{8.0, 2.0};
  std::optional<double> fixed_source_accuracy;
  // When set, claim accuracy is drawn per (site, predicate) instead of per
  // page, so pages of one site share quality on each predicate.
  bool site_predicate_quality = false;
  std::size_t claims_min = 5;
  std::size_t claims_max = 50;
  double extractor_coverage = 1.0;  // chance an extractor reads a given page
  double extractor_recall = 1.0;    // chance it extracts a given claim
  // Empty: n_extractors copies of the default profile. Otherwise its size
  // overrides n_extractors.
  std::vector<ExtractorProfile> extractors;
  std::size_t value_domain_size = 100;
  double item_popularity = 1.0;  // Zipf exponent over items, 0 = uniform
  std::vector<double> truths_per_item{0.95, 0.05};  // P(1 truth), P(2), ...
  double kb_fraction = 1.0;  // share of items whose truths go into the KB
  // Chance that an extraction's corruption comes from a stream shared by all
  // extractors reading the same claim, so they make identical mistakes.
  double shared_error_rate = 0.0;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument.
  void validate() const;
  std::vector<ExtractorProfile> resolved_extractors() const;
};

// Clean claims only: accurate sources, no extractor noise.
ExtractorProfile noiseless_extractor();

struct SourceInfo {
  std::string url;
  std::size_t site = 0;
  double accuracy = 0.0;  // per-page draw; unused under site_predicate_quality
  std::size_t claims = 0;
  std::size_t true_claims = 0;
};

struct SynthOutput {
  Corpus corpus;
  std::vector<Triple> kb;                          // sorted
  std::vector<std::pair<Triple, bool>> truth_log;  // every unique extracted triple, sorted
  std::vector<SourceInfo> sources;

  // Throws std::out_of_range for triples not in the corpus.
  bool is_true(const Triple& t) const;
};

SynthOutput generate(const SynthConfig& cfg);

void write_truth_log(const std::vector<std::pair<Triple, bool>>& log, const std::string& path);

nlohmann::json synth_config_to_json(const SynthConfig& cfg);
// Missing keys keep their defaults.
SynthConfig synth_config_from_json(const nlohmann::json& j);

}  // namespace kfusion
