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
// Iterative three-stage fusion executor.
//
//   Stage I   group observations by data item, compute value probabilities
//   Stage II  group (triple, probability) by provenance, recompute accuracy
//   Stage III group by triple, emit one row per unique triple
//
// Stages I and II repeat until the round budget is spent or no provenance
// accuracy moves by more than the stop threshold. Vote runs Stage I once.
// Every group is processed independently and written to its own slot, so
// results are identical for any number of workers.

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "kfusion/fusion.hpp"
#include "kfusion/gold.hpp"
#include "kfusion/hash.hpp"
#include "kfusion/ingest.hpp"
#include "kfusion/model.hpp"

namespace kfusion {

enum class Method { kVote, kAccu, kPopAccu };

std::string_view to_string(Method m);
std::optional<Method> parse_method(std::string_view name);

struct GoldInit {
  std::shared_ptr<const GoldStandard> gold;
  double sample_rate = 1.0;
};

struct PipelineConfig {
  Method method = Method::kAccu;
  Granularity granularity = Granularity::kExtractorUrl;
  FusionParams params;
  int rounds = 5;
  std::size_t sample_limit = 1'000'000;
  bool filter_coverage = false;
  std::optional<double> min_prov_accuracy;
  std::optional<GoldInit> gold_init;
  double accuracy_delta_stop = 1e-3;
  std::uint64_t seed = 0;
  unsigned workers = 1;

  // Throws std::invalid_argument on out-of-range values or filters combined
  // with Vote.
  void validate() const;
};

// Coverage filter, (extractor, site, predicate, pattern) provenances and
// accuracy threshold 0.5. Gold initialization is enabled only when a gold
// standard is given; without it this is the unsupervised variant.
PipelineConfig popaccu_plus_preset(std::shared_ptr<const GoldStandard> gold = nullptr,
                                   double sample_rate = 1.0);

struct RoundDiagnostics {
  int round = 0;
  double max_accuracy_delta = 0.0;
  std::size_t provenances = 0;
  std::size_t filtered_provenances = 0;  // excluded from Stage I this round
  std::size_t default_provenances = 0;   // still at default after Stage II
  double coverage = 0.0;                 // triples with a probability
  double wall_seconds = 0.0;
};

struct FusionRun {
  FusionResult result;
  AccuracyTable accuracies;
  std::vector<RoundDiagnostics> rounds;
  bool converged = false;
  double wall_seconds = 0.0;
};

// Throws FusionError on an empty corpus, std::invalid_argument on a bad
// config.
FusionRun run_fusion(const Corpus& c, const PipelineConfig& cfg);

// Positions of the selected items: everything when items.size() <= limit,
// otherwise the `limit` items with the smallest keyed hash. The result is
// sorted by position. Depends only on the multiset of item hashes and the
// group seed, never on the order items arrive in (ties broken by position,
// which only matters for exact duplicates).
std::vector<std::uint32_t> sample_positions(std::span<const std::uint64_t> item_hashes,
                                            std::size_t limit, std::uint64_t group_seed);

std::uint64_t group_seed(std::uint64_t seed, std::string_view group_key, std::uint64_t salt = 0);

// Generic form over arbitrary items; item_bytes(item) gives the bytes hashed
// for the selection order.
template <typename T, typename KeyFn>
std::vector<T> sample_group(std::span<const T> items, std::size_t limit,
                            std::string_view group_key, std::uint64_t seed, KeyFn item_bytes) {
  if (items.size() <= limit) return {items.begin(), items.end()};
  const auto gs = group_seed(seed, group_key);
  std::vector<std::pair<std::uint64_t, std::size_t>> ranked;
  ranked.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    ranked.emplace_back(hash_combine(gs, hash_bytes(item_bytes(items[i]))), i);
  }
  auto cmp = [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return item_bytes(items[a.second]) < item_bytes(items[b.second]);
  };
  std::nth_element(ranked.begin(), ranked.begin() + limit, ranked.end(), cmp);
  ranked.resize(limit);
  std::sort(ranked.begin(), ranked.end(), cmp);
  std::vector<T> out;
  out.reserve(limit);
  for (const auto& [h, i] : ranked) out.push_back(items[i]);
  return out;
}

AccuracyTable init_accuracies_from_gold(const Corpus& c, Granularity g, const GoldStandard& gold,
                                        double sample_rate, const FusionParams& params,
                                        std::uint64_t seed = 0);

// subject, predicate, object, probability (9 decimals; empty when absent).
void write_probabilities(const FusionResult& r, const std::string& path);
std::string format_probabilities(const FusionResult& r);

struct PredictionRow {
  Triple triple;
  std::optional<double> probability;
};

struct PredictionFile {
  std::vector<PredictionRow> rows;
  IngestReport report;
};

PredictionFile parse_probabilities_text(std::string_view text);
PredictionFile parse_probabilities(const std::string& path);

nlohmann::json config_to_json(const PipelineConfig& cfg);
nlohmann::json diagnostics_to_json(const FusionRun& run);

}  // namespace kfusion
