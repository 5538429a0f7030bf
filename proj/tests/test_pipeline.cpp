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
#include <numeric>
#include <random>
#include <set>

#include "kfusion/pipeline.hpp"
#include "kfusion/synth.hpp"
#include "support.hpp"

using namespace kfusion;
using kfusion::test::rec;

namespace {

std::map<Triple, std::optional<double>> by_triple(const FusionResult& r) {
  std::map<Triple, std::optional<double>> m;
  for (const auto& row : r.rows) m[row.triple] = row.probability;
  return m;
}

// Groups a corpus by data item the way the pipeline does, one observation
// per distinct (triple, provenance).
std::map<DataItem, ItemGroup> item_groups(const Corpus& c, Granularity g) {
  std::map<DataItem, std::set<std::pair<std::string, ProvenanceKey>>> seen;
  for (const auto& r : c.records) {
    seen[data_item(r.triple)].emplace(r.triple.object, provenance_key(r, g));
  }
  std::map<DataItem, ItemGroup> out;
  for (const auto& [item, obs] : seen) {
    auto& grp = out[item];
    grp.item = item;
    for (const auto& [v, p] : obs) grp.observations.push_back({v, p});
  }
  return out;
}

Corpus small_synth(std::uint64_t seed, std::size_t items = 3000) {
  SynthConfig cfg;
  cfg.n_items = items;
  cfg.n_sources = 400;
  cfg.n_sites = 40;
  cfg.seed = seed;
  return generate(cfg).corpus;
}

}  // namespace

TEST_CASE("method names") {
  for (auto m : {Method::kVote, Method::kAccu, Method::kPopAccu}) {
    CHECK(parse_method(to_string(m)) == m);
  }
  CHECK_FALSE(parse_method("crh").has_value());
}

TEST_CASE("config validation") {
  PipelineConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.rounds = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.method = Method::kVote;
  cfg.filter_coverage = true;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.min_prov_accuracy = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.gold_init = GoldInit{nullptr, 1.0};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK_THROWS_AS(run_fusion(Corpus{}, PipelineConfig{}), FusionError);
}

TEST_CASE("vote runs one pass and equals per-item vote") {
  auto c = small_synth(1, 500);
  PipelineConfig cfg;
  cfg.method = Method::kVote;
  auto run = run_fusion(c, cfg);
  CHECK(run.rounds.size() == 1);
  auto probs = by_triple(run.result);
  for (const auto& [item, g] : item_groups(c, cfg.granularity)) {
    for (const auto& [v, p] : vote_fuse(g)) {
      CHECK(probs.at({item.subject, item.predicate, v}) == p);
    }
  }
}

TEST_CASE("singleton default stays at its default accuracy") {
  auto c = make_corpus({rec("s", "p", "o", "E", "http://a.com/1")});
  PipelineConfig cfg;
  cfg.accuracy_delta_stop = 0.0;
  auto run = run_fusion(c, cfg);
  REQUIRE(run.rounds.size() == 5);
  REQUIRE(run.result.rows.size() == 1);
  CHECK(std::abs(*run.result.rows[0].probability - 0.8) <= 1e-12);
  CHECK(std::abs(run.accuracies.begin()->second.accuracy - 0.8) <= 1e-12);
  for (const auto& d : run.rounds) CHECK(d.max_accuracy_delta <= 1e-12);
}

TEST_CASE("round one equals direct accu per item") {
  auto c = small_synth(2, 800);
  PipelineConfig cfg;
  cfg.rounds = 1;
  auto run = run_fusion(c, cfg);
  auto probs = by_triple(run.result);
  AccuracyTable acc;
  for (const auto& r : c.records) acc[provenance_key(r, cfg.granularity)] = {0.8, 0, true};
  double worst = 0.0;
  for (const auto& [item, g] : item_groups(c, cfg.granularity)) {
    for (const auto& [v, p] : accu_fuse(g, acc, cfg.params)) {
      worst = std::max(worst, std::abs(*probs.at({item.subject, item.predicate, v}) - p));
    }
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("model-matched corpus keeps accuracies near the generator value") {
  SynthConfig sc;
  sc.n_items = 4000;
  sc.n_sources = 300;
  sc.n_sites = 30;
  sc.n_extractors = 1;
  sc.extractors = {noiseless_extractor()};
  sc.fixed_source_accuracy = 0.8;
  sc.truths_per_item = {1.0};
  sc.claims_min = 30;
  sc.claims_max = 60;
  sc.seed = 3;
  auto data = generate(sc);
  for (int rounds = 1; rounds <= 5; ++rounds) {
    PipelineConfig cfg;
    cfg.params.n_false = static_cast<int>(sc.value_domain_size);
    cfg.rounds = rounds;
    cfg.accuracy_delta_stop = 0.0;
    auto run = run_fusion(data.corpus, cfg);
    double sum = 0.0;
    for (const auto& [k, e] : run.accuracies) sum += e.accuracy;
    CHECK(std::abs(sum / run.accuracies.size() - 0.8) <= 0.05);
  }
}

TEST_CASE("accuracies stay clamped, one row per triple, full coverage") {
  auto c = small_synth(4);
  for (auto m : {Method::kAccu, Method::kPopAccu}) {
    PipelineConfig cfg;
    cfg.method = m;
    cfg.accuracy_delta_stop = 0.0;
    for (int rounds : {1, 3}) {
      cfg.rounds = rounds;
      auto run = run_fusion(c, cfg);
      for (const auto& [k, e] : run.accuracies) {
        CHECK(e.accuracy >= cfg.params.epsilon);
        CHECK(e.accuracy <= 1.0 - cfg.params.epsilon);
      }
      std::set<Triple> unique;
      for (const auto& r : c.records) unique.insert(r.triple);
      CHECK(run.result.rows.size() == unique.size());
      CHECK(by_triple(run.result).size() == unique.size());
      CHECK(run.result.coverage == 1.0);
      for (const auto& row : run.result.rows) {
        CHECK(*row.probability >= 0.0);
        CHECK(*row.probability <= 1.0);
      }
    }
  }
}

TEST_CASE("results do not depend on worker count") {
  auto c = small_synth(5, 6000);
  for (auto m : {Method::kVote, Method::kAccu, Method::kPopAccu}) {
    PipelineConfig cfg;
    cfg.method = m;
    cfg.granularity = Granularity::kExtractorSite;
    cfg.sample_limit = 50;
    cfg.workers = 1;
    auto base = format_probabilities(run_fusion(c, cfg).result);
    for (unsigned w : {2u, 8u}) {
      cfg.workers = w;
      CHECK(format_probabilities(run_fusion(c, cfg).result) == base);
    }
  }
}

TEST_CASE("record order does not matter") {
  auto c = small_synth(6, 500);
  auto shuffled = c;
  std::mt19937_64 rng(1);
  std::shuffle(shuffled.records.begin(), shuffled.records.end(), rng);
  PipelineConfig cfg;
  cfg.method = Method::kPopAccu;
  CHECK(format_probabilities(run_fusion(c, cfg).result) ==
        format_probabilities(run_fusion(shuffled, cfg).result));
}

TEST_CASE("sampling selection") {
  std::vector<std::uint64_t> ten(10);
  std::iota(ten.begin(), ten.end(), 100u);
  CHECK(sample_positions(ten, 1'000'000, 7).size() == 10);

  std::vector<std::uint64_t> many(5000);
  for (std::size_t i = 0; i < many.size(); ++i) many[i] = mix64(i);
  auto keep = sample_positions(many, 1000, 7);
  CHECK(keep.size() == 1000);
  CHECK(std::set<std::uint32_t>(keep.begin(), keep.end()).size() == 1000);
  CHECK(std::is_sorted(keep.begin(), keep.end()));

  auto selected = [&](const std::vector<std::uint64_t>& hs) {
    std::multiset<std::uint64_t> out;
    for (auto p : sample_positions(hs, 1000, 7)) out.insert(hs[p]);
    return out;
  };
  auto shuffled = many;
  std::mt19937_64 rng(3);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  CHECK(selected(many) == selected(shuffled));
  CHECK(sample_positions(many, 1000, 8) != keep);
}

TEST_CASE("generic group sampling ignores arrival order") {
  std::vector<std::string> items;
  for (int i = 0; i < 3000; ++i) items.push_back("item" + std::to_string(i));
  auto id = [](const std::string& s) -> std::string_view { return s; };
  auto a = sample_group<std::string>(items, 500, "group", 11, id);
  auto shuffled = items;
  std::mt19937_64 rng(4);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  auto b = sample_group<std::string>(shuffled, 500, "group", 11, id);
  CHECK(a.size() == 500);
  CHECK(std::multiset<std::string>(a.begin(), a.end()) == std::multiset<std::string>(b.begin(), b.end()));
  CHECK(sample_group<std::string>(items, 5000, "group", 11, id).size() == items.size());
}

TEST_CASE("sample limit only applies to large groups") {
  auto c = small_synth(7, 1500);
  PipelineConfig cfg;
  auto unbounded = format_probabilities(run_fusion(c, cfg).result);
  cfg.sample_limit = 100000;
  CHECK(format_probabilities(run_fusion(c, cfg).result) == unbounded);
  cfg.sample_limit = 5;
  cfg.granularity = Granularity::kExtractorSite;
  auto sampled = run_fusion(c, cfg);
  CHECK(sampled.result.coverage == 1.0);
}

TEST_CASE("coverage filter") {
  // Item s/p has one value from one provenance; item t/p has a triple seen
  // by two provenances.
  auto c = make_corpus({rec("s", "p", "o", "E", "http://a.com/1"),
                        rec("t", "p", "x", "E", "http://a.com/1"),
                        rec("t", "p", "x", "E", "http://b.com/1"),
                        rec("t", "p", "y", "E", "http://c.com/1")});
  PipelineConfig cfg;
  cfg.filter_coverage = true;
  cfg.rounds = 1;
  auto one = run_fusion(c, cfg);
  auto probs = by_triple(one.result);
  CHECK_FALSE(probs.at({"s", "p", "o"}).has_value());
  CHECK(probs.at({"t", "p", "x"}).has_value());
  CHECK(probs.at({"t", "p", "y"}).has_value());

  // a.com/1 is evaluated through t/p, so s/p is fused from round 2 on; the
  // c.com provenance is evaluated too. Nothing stays default.
  cfg.rounds = 5;
  cfg.accuracy_delta_stop = 0.0;
  auto five = run_fusion(c, cfg);
  CHECK(by_triple(five.result).at({"s", "p", "o"}).has_value());

  // A provenance that never touches an eligible item stays default and its
  // triples stay without a probability.
  auto lonely = make_corpus({rec("s", "p", "o", "E", "http://a.com/1"),
                             rec("t", "p", "x", "E", "http://b.com/1"),
                             rec("t", "p", "x", "E", "http://c.com/1")});
  auto run = run_fusion(lonely, cfg);
  CHECK_FALSE(by_triple(run.result).at({"s", "p", "o"}).has_value());
  CHECK(run.result.coverage == doctest::Approx(0.5));
  CHECK(run.accuracies.at(ProvenanceKey{{"E", "http://a.com/1"}}).is_default);
  CHECK(run.rounds.back().filtered_provenances == 1);
}

TEST_CASE("coverage filter is the identity when every triple has two provenances") {
  std::vector<ExtractionRecord> rs;
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> pick(0, 9);
  for (int i = 0; i < 200; ++i) {
    std::string s = "s" + std::to_string(i % 40), o = "o" + std::to_string(pick(rng) % 3);
    rs.push_back(rec(s, "p", o, "E", "http://a.com/" + std::to_string(pick(rng))));
    rs.push_back(rec(s, "p", o, "F", "http://b.com/" + std::to_string(pick(rng))));
  }
  auto c = make_corpus(rs);
  for (auto m : {Method::kAccu, Method::kPopAccu}) {
    PipelineConfig cfg;
    cfg.method = m;
    auto plain = format_probabilities(run_fusion(c, cfg).result);
    cfg.filter_coverage = true;
    CHECK(format_probabilities(run_fusion(c, cfg).result) == plain);
  }
}

TEST_CASE("accuracy threshold") {
  auto c = small_synth(8, 800);
  PipelineConfig cfg;
  auto plain = format_probabilities(run_fusion(c, cfg).result);
  cfg.min_prov_accuracy = 0.0;
  CHECK(format_probabilities(run_fusion(c, cfg).result) == plain);

  // Every provenance starts below the threshold: each triple takes the mean
  // accuracy of its provenances.
  auto single = make_corpus({rec("s", "p", "o", "E", "http://a.com/1")});
  PipelineConfig low;
  low.params.default_accuracy = 0.05;
  low.min_prov_accuracy = 0.1;
  auto run = run_fusion(single, low);
  CHECK(std::abs(*run.result.rows[0].probability - 0.05) <= 1e-12);
}

TEST_CASE("accuracy threshold fallback with gold accuracies") {
  // Provenance a.com/1 is right on 1 of 20 labeled triples and also extracts
  // one triple outside the KB.
  std::vector<ExtractionRecord> rs;
  std::vector<Triple> kb;
  for (int i = 0; i < 20; ++i) {
    std::string s = "s" + std::to_string(i);
    kb.push_back({s, "p", "t"});
    rs.push_back(rec(s, "p", i == 0 ? "t" : "f", "E", "http://a.com/1"));
  }
  rs.push_back(rec("x", "p", "o", "E", "http://a.com/1"));
  auto gold = std::make_shared<const GoldStandard>(kb);
  PipelineConfig cfg;
  cfg.min_prov_accuracy = 0.1;
  cfg.gold_init = GoldInit{gold, 1.0};
  auto run = run_fusion(make_corpus(rs), cfg);
  CHECK(std::abs(*by_triple(run.result).at({"x", "p", "o"}) - 0.05) <= 1e-12);
}

TEST_CASE("gold initialization") {
  std::vector<Triple> kb{{"a", "p", "1"}, {"b", "p", "1"}, {"c", "p", "1"}, {"d", "p", "1"}};
  auto c = make_corpus({rec("a", "p", "1", "E", "u1"), rec("b", "p", "1", "E", "u1"),
                        rec("c", "p", "2", "E", "u1"), rec("d", "p", "2", "E", "u1"),
                        rec("z", "p", "1", "E", "u2")});
  GoldStandard gs(kb);
  FusionParams params;
  auto acc = init_accuracies_from_gold(c, Granularity::kExtractorUrl, gs, 1.0, params);
  auto labeled = acc.at(ProvenanceKey{{"E", "u1"}});
  CHECK(labeled.accuracy == 0.5);
  CHECK_FALSE(labeled.is_default);
  CHECK(labeled.support == 4);
  auto unlabeled = acc.at(ProvenanceKey{{"E", "u2"}});
  CHECK(unlabeled.accuracy == 0.8);
  CHECK(unlabeled.is_default);

  // Sampled labels are a deterministic subset.
  auto again = init_accuracies_from_gold(c, Granularity::kExtractorUrl, gs, 0.5, params, 3);
  CHECK(again == init_accuracies_from_gold(c, Granularity::kExtractorUrl, gs, 0.5, params, 3));
  CHECK_THROWS(init_accuracies_from_gold(c, Granularity::kExtractorUrl, gs, 0.0, params));
}

TEST_CASE("preset") {
  auto unsup = popaccu_plus_preset();
  CHECK(unsup.method == Method::kPopAccu);
  CHECK(unsup.filter_coverage);
  CHECK(unsup.granularity == Granularity::kExtractorSitePredicatePattern);
  CHECK(unsup.min_prov_accuracy == 0.5);
  CHECK_FALSE(unsup.gold_init.has_value());

  auto gold = std::make_shared<const GoldStandard>(std::vector<Triple>{{"a", "p", "1"}});
  auto semi = popaccu_plus_preset(gold, 0.2);
  REQUIRE(semi.gold_init.has_value());
  CHECK(semi.gold_init->sample_rate == 0.2);
  CHECK_NOTHROW(semi.validate());
}

TEST_CASE("convergence stops early") {
  auto c = small_synth(10, 1000);
  PipelineConfig cfg;
  cfg.rounds = 50;
  cfg.accuracy_delta_stop = 1e-3;
  auto run = run_fusion(c, cfg);
  CHECK(run.converged);
  CHECK(run.rounds.size() < 50);
  CHECK(run.rounds.back().max_accuracy_delta < 1e-3);
}

TEST_CASE("probability files round-trip") {
  FusionResult r;
  r.rows = {{{"a", "p", "x\ty"}, 0.25, 1, 1, 1}, {{"b", "p", "1"}, std::nullopt, 1, 1, 1}};
  auto text = format_probabilities(r);
  CHECK(text == "a\tp\tx\\ty\t0.250000000\nb\tp\t1\t\n");
  auto back = parse_probabilities_text(text);
  REQUIRE(back.rows.size() == 2);
  CHECK(back.rows[0].triple.object == "x\ty");
  CHECK(back.rows[0].probability == 0.25);
  CHECK_FALSE(back.rows[1].probability.has_value());
  auto bad = parse_probabilities_text("a\tp\to\t1.5\na\tp\n");
  CHECK(bad.rows.empty());
  CHECK(bad.report.malformed == 2);
}

TEST_CASE("config json carries every resolved field") {
  auto j = config_to_json(popaccu_plus_preset());
  for (const char* k : {"method", "granularity", "n_false", "default_accuracy", "epsilon", "rounds",
                        "sample_limit", "filter_coverage", "min_prov_accuracy", "gold_init",
                        "accuracy_delta_stop", "seed", "workers"}) {
    CHECK(j.contains(k));
  }
  CHECK(j["method"] == "popaccu");
  CHECK(j["min_prov_accuracy"] == 0.5);
}
