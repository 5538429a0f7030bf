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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "kfusion/eval.hpp"
#include "kfusion/pipeline.hpp"
#include "kfusion/synth.hpp"
#include "kfusion/tsv.hpp"
#include "support.hpp"

using namespace kfusion;

namespace {

SynthConfig small() {
  SynthConfig cfg;
  cfg.n_items = 1000;
  cfg.n_sources = 150;
  cfg.n_sites = 15;
  cfg.seed = 12;
  return cfg;
}

std::string serialize(const SynthOutput& out) {
  std::string s;
  for (const auto& r : out.corpus.records) s += format_record(r) + "\n";
  for (const auto& t : out.kb) s += t.subject + "\t" + t.predicate + "\t" + t.object + "\n";
  for (const auto& [t, truth] : out.truth_log) s += t.object + (truth ? "1" : "0");
  return s;
}

}  // namespace

TEST_CASE("same seed gives identical output") {
  auto a = generate(small());
  auto b = generate(small());
  CHECK(serialize(a) == serialize(b));
  auto cfg = small();
  cfg.seed = 13;
  CHECK(serialize(generate(cfg)) != serialize(a));

  kfusion::test::TempDir dir;
  write_records(a.corpus, dir.file("a.tsv"));
  write_records(b.corpus, dir.file("b.tsv"));
  CHECK(tsv::read_file(dir.file("a.tsv")) == tsv::read_file(dir.file("b.tsv")));
  write_truth_log(a.truth_log, dir.file("truth.tsv"));
  auto text = tsv::read_file(dir.file("truth.tsv"));
  CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(a.truth_log.size()));
}

TEST_CASE("noiseless extraction from perfect sources is all true") {
  auto cfg = small();
  cfg.fixed_source_accuracy = 1.0;
  cfg.extractors = {noiseless_extractor(), noiseless_extractor()};
  cfg.truths_per_item = {1.0};
  auto out = generate(cfg);
  REQUIRE_FALSE(out.corpus.records.empty());
  for (const auto& [t, truth] : out.truth_log) CHECK(truth);
  PipelineConfig pc;
  pc.method = Method::kVote;
  for (const auto& row : run_fusion(out.corpus, pc).result.rows) CHECK(*row.probability == 1.0);
}

TEST_CASE("truth log agrees with a full KB") {
  auto out = generate(small());
  std::set<Triple> kb(out.kb.begin(), out.kb.end());
  for (const auto& [t, truth] : out.truth_log) CHECK(truth == (kb.count(t) == 1));
  CHECK(std::is_sorted(out.truth_log.begin(), out.truth_log.end()));

  auto cfg = small();
  cfg.kb_fraction = 0.3;
  auto partial = generate(cfg);
  CHECK(partial.kb.size() < out.kb.size());
  std::set<Triple> partial_kb(partial.kb.begin(), partial.kb.end());
  for (const auto& [t, truth] : partial.truth_log) {
    if (partial_kb.count(t)) CHECK(truth);
  }
}

TEST_CASE("empirical source accuracy tracks the sampled accuracy") {
  SynthConfig cfg;
  cfg.n_items = 5000;
  cfg.n_sources = 40;
  cfg.n_sites = 10;
  cfg.claims_min = 1500;
  cfg.claims_max = 2000;
  cfg.extractors = {noiseless_extractor()};
  cfg.item_popularity = 0.0;
  cfg.seed = 5;
  auto out = generate(cfg);

  std::map<std::string, std::pair<std::size_t, std::size_t>> per_url;
  for (const auto& r : out.corpus.records) {
    auto& [n, t] = per_url[r.url];
    ++n;
    t += out.is_true(r.triple) ? 1 : 0;
  }
  std::size_t checked = 0;
  for (const auto& s : out.sources) {
    const auto& [n, t] = per_url.at(s.url);
    CHECK(n == s.claims);
    CHECK(t == s.true_claims);
    REQUIRE(n >= 1000);
    CHECK(std::abs(static_cast<double>(t) / n - s.accuracy) <= 0.03);
    ++checked;
  }
  CHECK(checked == cfg.n_sources);
}

TEST_CASE("zipf skew concentrates support") {
  SynthConfig cfg;
  cfg.n_items = 10000;
  cfg.n_sources = 2000;
  cfg.extractors = {noiseless_extractor()};
  cfg.item_popularity = 1.0;
  cfg.seed = 6;
  auto out = generate(cfg);
  std::map<DataItem, std::size_t> support;
  for (const auto& r : out.corpus.records) ++support[data_item(r.triple)];
  std::vector<std::size_t> counts(cfg.n_items, 0);
  std::size_t i = 0;
  for (const auto& [item, n] : support) counts[i++] = n;
  std::sort(counts.rbegin(), counts.rend());
  double mean = static_cast<double>(out.corpus.records.size()) / cfg.n_items;
  std::size_t top = cfg.n_items / 100;
  double top_mean = 0.0;
  for (std::size_t k = 0; k < top; ++k) top_mean += counts[k];
  top_mean /= top;
  CHECK(top_mean >= 10.0 * mean);
}

TEST_CASE("corruption classes") {
  auto cfg = small();
  cfg.fixed_source_accuracy = 1.0;
  cfg.truths_per_item = {1.0};
  ExtractorProfile junk = noiseless_extractor();
  junk.triple_error = 1.0;
  cfg.extractors = {junk};
  for (const auto& r : generate(cfg).corpus.records) CHECK(r.triple.object[0] == 'x');

  ExtractorProfile entity = noiseless_extractor();
  entity.entity_error = 1.0;
  cfg.extractors = {noiseless_extractor(), entity};
  auto out = generate(cfg);
  std::set<std::pair<std::string, std::string>> clean;
  for (const auto& r : out.corpus.records) {
    if (r.extractor == "E0") clean.emplace(r.url, r.triple.subject + "/" + r.triple.predicate);
  }
  std::size_t moved = 0, total = 0;
  for (const auto& r : out.corpus.records) {
    if (r.extractor != "E1") continue;
    ++total;
    moved += clean.count({r.url, r.triple.subject + "/" + r.triple.predicate}) == 0;
    CHECK(r.triple.object[0] == 'v');
  }
  CHECK(moved * 10 >= total * 9);

  ExtractorProfile pred = noiseless_extractor();
  pred.predicate_error = 1.0;
  cfg.extractors = {pred};
  cfg.n_items = 1000;
  std::size_t wrong = 0;
  auto po = generate(cfg);
  for (const auto& [t, truth] : po.truth_log) wrong += !truth;
  CHECK(wrong * 10 >= po.truth_log.size() * 9);
}

TEST_CASE("default error mix is roughly 44/44/20 of thirty percent") {
  ExtractorProfile p;
  double total = p.triple_error + p.entity_error + p.predicate_error;
  CHECK(total == doctest::Approx(0.3 * 1.08));
  CHECK(p.triple_error == p.entity_error);
}

TEST_CASE("shared error channel correlates extractors") {
  auto kappa_of = [](double shared) {
    SynthConfig cfg;
    cfg.n_items = 3000;
    cfg.n_sources = 300;
    cfg.n_extractors = 2;
    cfg.extractor_recall = 0.6;
    cfg.shared_error_rate = shared;
    cfg.seed = 8;
    auto rows = extractor_kappa(generate(cfg).corpus);
    REQUIRE(rows.size() == 1);
    return rows[0].kappa;
  };
  CHECK(kappa_of(1.0) > kappa_of(0.0) + 0.1);
}

TEST_CASE("site predicate quality") {
  auto cfg = small();
  cfg.site_predicate_quality = true;
  cfg.extractors = {noiseless_extractor()};
  cfg.n_items = 2000;
  auto out = generate(cfg);
  // Pages of one site share a quality per predicate.
  std::map<std::pair<std::size_t, std::string>, std::pair<std::size_t, std::size_t>> cells;
  std::map<std::string, std::size_t> site_of_url;
  for (const auto& s : out.sources) site_of_url[s.url] = s.site;
  for (const auto& r : out.corpus.records) {
    auto& [n, t] = cells[{site_of_url.at(r.url), r.triple.predicate}];
    ++n;
    t += out.is_true(r.triple) ? 1 : 0;
  }
  std::size_t truths = 0;
  for (const auto& [t, truth] : out.truth_log) truths += truth;
  CHECK(truths > 0);
  CHECK(truths < out.truth_log.size());
  // Cell accuracies spread out more than one shared rate would allow.
  double lo = 1.0, hi = 0.0;
  for (const auto& [k, v] : cells) {
    if (v.first < 40) continue;
    double a = static_cast<double>(v.second) / v.first;
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  CHECK(hi - lo > 0.3);
}

TEST_CASE("config json round-trip and validation") {
  auto cfg = small();
  cfg.site_predicate_quality = true;
  cfg.fixed_source_accuracy = 0.7;
  cfg.extractors = {noiseless_extractor()};
  auto back = synth_config_from_json(synth_config_to_json(cfg));
  CHECK(synth_config_to_json(back) == synth_config_to_json(cfg));
  CHECK(serialize(generate(back)) == serialize(generate(cfg)));

  auto bad = small();
  bad.claims_min = 10;
  bad.claims_max = 5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = small();
  bad.kb_fraction = 2.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("extractor accuracy grows with extractor count") {
  int ordered = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SynthConfig cfg;
    cfg.n_items = 2000;
    cfg.n_sources = 300;
    cfg.seed = seed;
    auto out = generate(cfg);
    GoldStandard gs(out.kb);
    auto labels = label_corpus(gs, out.corpus).labels;
    auto rows = accuracy_by_stratum(out.corpus, labels, StratumKey::kExtractors);
    bool ok = true;
    for (std::size_t i = 1; i < rows.size(); ++i) ok &= rows[i].accuracy >= rows[i - 1].accuracy;
    ordered += ok;
  }
  CHECK(ordered >= 8);
}
