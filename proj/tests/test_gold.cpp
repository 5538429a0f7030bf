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

#include <random>

#include "kfusion/gold.hpp"
#include "kfusion/ingest.hpp"
#include "kfusion/synth.hpp"
#include "support.hpp"

using namespace kfusion;
using kfusion::test::rec;

TEST_CASE("lcwa labels") {
  std::vector<Triple> kb{{"s", "p", "o"}, {"s", "p", "o2"}, {"t", "p", "x"}};
  GoldStandard gs(kb);
  CHECK(gs.label({"s", "p", "o"}) == Label::kTrue);
  CHECK(gs.label({"s", "p", "o2"}) == Label::kTrue);
  CHECK(gs.label({"s", "p", "o3"}) == Label::kFalse);
  CHECK(gs.label({"s", "q", "o"}) == Label::kUnknown);
  CHECK(gs.label({"u", "p", "x"}) == Label::kUnknown);
  CHECK(lcwa_label(gs, {"t", "p", "y"}) == Label::kFalse);
  CHECK(gs.kb_size() == 3);
  CHECK(gs.item_count() == 2);
}

TEST_CASE("label_corpus coverage") {
  std::vector<Triple> kb{{"s", "p", "o"}, {"t", "p", "x"}};
  GoldStandard gs(kb);

  auto inside = make_corpus({rec("s", "p", "o", "E", "u"), rec("t", "p", "x", "E", "u"),
                             rec("t", "p", "x", "F", "u")});
  auto r = label_corpus(gs, inside);
  CHECK(r.unique_triples == 2);
  CHECK(r.labeled_fraction() == 1.0);
  CHECK(r.true_fraction() == 1.0);

  auto outside = make_corpus({rec("a", "p", "o", "E", "u"), rec("s", "q", "o", "E", "u")});
  r = label_corpus(gs, outside);
  CHECK(r.labeled == 0);
  CHECK(r.labeled_fraction() == 0.0);
  CHECK(r.labels.at({"a", "p", "o"}) == Label::kUnknown);
}

TEST_CASE("labels partition and grow monotonically with the KB") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> d(0, 5);
  auto t = [&] {
    return Triple{"s" + std::to_string(d(rng)), "p" + std::to_string(d(rng) % 2),
                  "o" + std::to_string(d(rng))};
  };
  for (int round = 0; round < 50; ++round) {
    std::vector<Triple> kb;
    for (int i = 0; i < 10; ++i) kb.push_back(t());
    std::vector<Triple> bigger = kb;
    for (int i = 0; i < 10; ++i) bigger.push_back(t());
    GoldStandard small_gs(kb), big_gs(bigger);
    for (int i = 0; i < 50; ++i) {
      auto q = t();
      auto a = small_gs.label(q);
      auto b = big_gs.label(q);
      CHECK((a == Label::kTrue || a == Label::kFalse || a == Label::kUnknown));
      if (a == Label::kTrue) CHECK(b == Label::kTrue);
      if (a != Label::kUnknown) CHECK(b != Label::kUnknown);
    }
  }
}

TEST_CASE("labels on a synthetic corpus match the generator") {
  SynthConfig cfg;
  cfg.n_items = 800;
  cfg.n_sources = 120;
  cfg.n_sites = 20;
  cfg.seed = 4;
  auto out = generate(cfg);
  GoldStandard gs(out.kb);
  auto r = label_corpus(gs, out.corpus);

  std::size_t truths = 0, labeled = 0;
  for (const auto& [t, truth] : out.truth_log) {
    auto l = r.labels.at(t);
    CHECK((l == Label::kTrue) == truth);
    truths += truth;
    labeled += l != Label::kUnknown;
  }
  CHECK(r.unique_triples == out.truth_log.size());
  CHECK(r.labeled_true == truths);
  CHECK(r.labeled == labeled);
}
