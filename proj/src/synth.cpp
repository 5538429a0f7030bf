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

#include "kfusion/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_set>

#include "kfusion/hash.hpp"
#include "kfusion/tsv.hpp"

namespace kfusion {

namespace {

using Rng = std::mt19937_64;

// Stream ids for derived seeds.
enum Stream : std::uint64_t {
  kItems = 1,
  kSources = 2,
  kSiteQuality = 3,
  kClaims = 4,
  kExtractors = 5,
  kShared = 6,
  kKb = 7,
};

Rng stream(std::uint64_t seed, std::uint64_t id, std::uint64_t sub = 0) {
  return Rng(hash_combine(hash_combine(seed, id), sub));
}

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

bool bernoulli(Rng& rng, double p) { return p >= 1.0 || (p > 0.0 && uniform01(rng) < p); }

double sample_beta(Rng& rng, const BetaParams& b) {
  double x = std::gamma_distribution<double>(b.alpha, 1.0)(rng);
  double y = std::gamma_distribution<double>(b.beta, 1.0)(rng);
  if (x + y == 0.0) return 0.5;
  return x / (x + y);
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

struct Item {
  std::vector<std::uint32_t> truths;  // value ids in [0, D]
};

// Claim as generated by a source, before extraction.
struct Claim {
  std::uint32_t item;
  std::uint32_t value;
};

// Extracted triple in index form; object < 0 means an out-of-domain string.
struct Extracted {
  std::size_t subject;
  std::size_t predicate;
  std::int64_t object;
  std::string junk;
};

void check_prob(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(what) + " must be in [0, 1]");
}

void check_beta(const BetaParams& b, const char* what) {
  if (!(b.alpha > 0.0 && b.beta > 0.0)) {
    throw std::invalid_argument(std::string(what) + " needs positive Beta parameters");
  }
}

}  // namespace

ExtractorProfile noiseless_extractor() {
  ExtractorProfile p;
  p.triple_error = p.entity_error = p.predicate_error = 0.0;
  p.n_patterns = 1;
  p.missing_confidence = 0.0;
  return p;
}

void SynthConfig::validate() const {
  if (n_items < 1 || n_predicates < 1 || n_sources < 1 || n_sites < 1) {
    throw std::invalid_argument("synth sizes must be >= 1");
  }
  if (extractors.empty() && n_extractors < 1) throw std::invalid_argument("need an extractor");
  if (claims_min < 1 || claims_max < claims_min) {
    throw std::invalid_argument("claims range must satisfy 1 <= min <= max");
  }
  if (value_domain_size < 1) throw std::invalid_argument("value domain must be >= 1");
  if (item_popularity < 0.0) throw std::invalid_argument("Zipf exponent must be >= 0");
  if (truths_per_item.empty() || truths_per_item.size() > value_domain_size + 1) {
    throw std::invalid_argument("truths_per_item must be non-empty and fit the value domain");
  }
  double total = 0.0;
  for (double w : truths_per_item) {
    check_prob(w, "truths_per_item weight");
    total += w;
  }
  if (total <= 0.0) throw std::invalid_argument("truths_per_item has no mass");
  check_beta(source_accuracy, "source accuracy");
  if (fixed_source_accuracy) check_prob(*fixed_source_accuracy, "fixed source accuracy");
  check_prob(extractor_coverage, "extractor coverage");
  check_prob(extractor_recall, "extractor recall");
  check_prob(kb_fraction, "kb fraction");
  check_prob(shared_error_rate, "shared error rate");
  for (const auto& e : resolved_extractors()) {
    check_prob(e.triple_error, "triple error");
    check_prob(e.entity_error, "entity error");
    check_prob(e.predicate_error, "predicate error");
    check_prob(e.missing_confidence, "missing confidence");
    check_beta(e.confidence_correct, "confidence");
    check_beta(e.confidence_wrong, "confidence");
    if (e.n_patterns < 1) throw std::invalid_argument("n_patterns must be >= 1");
  }
}

std::vector<ExtractorProfile> SynthConfig::resolved_extractors() const {
  if (!extractors.empty()) return extractors;
  return std::vector<ExtractorProfile>(n_extractors);
}

bool SynthOutput::is_true(const Triple& t) const {
  auto it = std::lower_bound(truth_log.begin(), truth_log.end(), t,
                             [](const auto& e, const Triple& x) { return e.first < x; });
  if (it == truth_log.end() || !(it->first == t)) throw std::out_of_range("triple not in corpus");
  return it->second;
}

SynthOutput generate(const SynthConfig& cfg) {
  cfg.validate();
  const auto profiles = cfg.resolved_extractors();
  const std::size_t P = cfg.n_predicates;
  const std::size_t D = cfg.value_domain_size;
  const std::size_t n_subjects = (cfg.n_items + P - 1) / P;
  auto item_of = [P](std::size_t s, std::size_t p) { return s * P + p; };

  // Latent truths.
  std::vector<Item> items(cfg.n_items);
  {
    Rng rng = stream(cfg.seed, kItems);
    std::discrete_distribution<std::size_t> n_truths(cfg.truths_per_item.begin(),
                                                     cfg.truths_per_item.end());
    std::vector<std::uint32_t> pool(D + 1);
    for (auto& item : items) {
      std::size_t k = n_truths(rng) + 1;
      std::iota(pool.begin(), pool.end(), 0u);
      for (std::size_t i = 0; i < k; ++i) {
        std::swap(pool[i], pool[i + uniform_index(rng, pool.size() - i)]);
      }
      item.truths.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
      std::sort(item.truths.begin(), item.truths.end());
    }
  }
  auto is_truth = [&](std::size_t item, std::uint32_t v) {
    const auto& t = items[item].truths;
    return std::binary_search(t.begin(), t.end(), v);
  };

  // Sources and their quality.
  SynthOutput out;
  out.sources.resize(cfg.n_sources);
  {
    Rng rng = stream(cfg.seed, kSources);
    for (std::size_t j = 0; j < cfg.n_sources; ++j) {
      auto& s = out.sources[j];
      s.site = uniform_index(rng, cfg.n_sites);
      s.accuracy = cfg.fixed_source_accuracy ? *cfg.fixed_source_accuracy
                                             : sample_beta(rng, cfg.source_accuracy);
      s.url = "http://site" + std::to_string(s.site) + ".example.org/page" + std::to_string(j);
    }
  }
  std::vector<double> site_quality;
  if (cfg.site_predicate_quality) {
    Rng rng = stream(cfg.seed, kSiteQuality);
    site_quality.resize(cfg.n_sites * P);
    for (auto& q : site_quality) {
      q = cfg.fixed_source_accuracy ? *cfg.fixed_source_accuracy
                                    : sample_beta(rng, cfg.source_accuracy);
    }
  }

  // Zipf popularity over items; ranks are shuffled onto item ids so that
  // popular items are spread over subjects and predicates.
  std::vector<std::size_t> rank_to_item(cfg.n_items);
  std::iota(rank_to_item.begin(), rank_to_item.end(), std::size_t{0});
  {
    Rng rng = stream(cfg.seed, kItems, 1);
    std::shuffle(rank_to_item.begin(), rank_to_item.end(), rng);
  }
  std::vector<double> weights(cfg.n_items);
  for (std::size_t r = 0; r < cfg.n_items; ++r) {
    weights[r] = 1.0 / std::pow(static_cast<double>(r + 1), cfg.item_popularity);
  }
  std::discrete_distribution<std::size_t> zipf(weights.begin(), weights.end());

  // Claims per source.
  std::vector<std::vector<Claim>> claims(cfg.n_sources);
  for (std::size_t j = 0; j < cfg.n_sources; ++j) {
    Rng rng = stream(cfg.seed, kClaims, j);
    std::size_t k = std::uniform_int_distribution<std::size_t>(cfg.claims_min, cfg.claims_max)(rng);
    k = std::min(k, cfg.n_items);
    std::unordered_set<std::size_t> chosen;
    std::size_t attempts = 0;
    while (chosen.size() < k && attempts < 50 * k) {
      ++attempts;
      chosen.insert(rank_to_item[zipf(rng)]);
    }
    std::vector<std::size_t> picked(chosen.begin(), chosen.end());
    std::sort(picked.begin(), picked.end());
    auto& src = out.sources[j];
    for (auto item : picked) {
      double acc = cfg.site_predicate_quality ? site_quality[src.site * P + item % P] : src.accuracy;
      std::uint32_t value;
      const auto& truths = items[item].truths;
      if (bernoulli(rng, acc)) {
        value = truths[uniform_index(rng, truths.size())];
      } else {
        // Uniform over the D + 1 - |truths| false values.
        std::size_t r = uniform_index(rng, D + 1 - truths.size());
        value = 0;
        for (std::uint32_t v = 0; v <= D; ++v) {
          if (is_truth(item, v)) continue;
          if (r-- == 0) {
            value = v;
            break;
          }
        }
      }
      claims[j].push_back({static_cast<std::uint32_t>(item), value});
      ++src.claims;
      src.true_claims += is_truth(item, value) ? 1 : 0;
    }
  }

  // Extraction.
  std::vector<ExtractionRecord> records;
  for (std::size_t e = 0; e < profiles.size(); ++e) {
    const auto& prof = profiles[e];
    Rng rng = stream(cfg.seed, kExtractors, e);
    const std::string extractor = "E" + std::to_string(e);
    for (std::size_t j = 0; j < cfg.n_sources; ++j) {
      if (!bernoulli(rng, cfg.extractor_coverage)) continue;
      for (std::size_t c = 0; c < claims[j].size(); ++c) {
        if (!bernoulli(rng, cfg.extractor_recall)) continue;
        const auto& claim = claims[j][c];
        Extracted x{claim.item / P, claim.item % P, claim.value, {}};

        std::optional<Rng> shared;
        if (bernoulli(rng, cfg.shared_error_rate)) {
          shared.emplace(stream(cfg.seed, kShared, hash_combine(j, c)));
        }
        Rng& err = shared ? *shared : rng;
        if (bernoulli(err, prof.triple_error)) {
          x.object = -1;
          x.junk = "x" + std::to_string(err() % 1000000007ULL);
        }
        if (bernoulli(err, prof.entity_error) && n_subjects > 1) {
          std::size_t s = uniform_index(err, n_subjects - 1);
          if (s >= x.subject) ++s;
          if (item_of(s, x.predicate) < cfg.n_items) x.subject = s;
        }
        if (bernoulli(err, prof.predicate_error) && P > 1) {
          std::size_t p = uniform_index(err, P - 1);
          if (p >= x.predicate) ++p;
          if (item_of(x.subject, p) < cfg.n_items) x.predicate = p;
        }

        const std::size_t item = item_of(x.subject, x.predicate);
        const bool correct = x.object >= 0 && is_truth(item, static_cast<std::uint32_t>(x.object));
        ExtractionRecord r;
        r.triple.subject = "e" + std::to_string(x.subject);
        r.triple.predicate = "p" + std::to_string(x.predicate);
        r.triple.object = x.object >= 0 ? "v" + std::to_string(x.object) : x.junk;
        r.extractor = extractor;
        r.url = out.sources[j].url;
        r.pattern = extractor + "-pat" + std::to_string((x.predicate + e) % prof.n_patterns);
        if (!bernoulli(rng, prof.missing_confidence)) {
          r.confidence = sample_beta(rng, correct ? prof.confidence_correct : prof.confidence_wrong);
        }
        records.push_back(std::move(r));
      }
    }
  }
  out.corpus = make_corpus(std::move(records));

  // Reference KB: the truths of a kb_fraction share of items.
  std::vector<Triple> all_truths;
  {
    Rng rng = stream(cfg.seed, kKb);
    for (std::size_t i = 0; i < cfg.n_items; ++i) {
      const bool in_kb = bernoulli(rng, cfg.kb_fraction);
      for (auto v : items[i].truths) {
        Triple t{"e" + std::to_string(i / P), "p" + std::to_string(i % P), "v" + std::to_string(v)};
        if (in_kb) out.kb.push_back(t);
        all_truths.push_back(std::move(t));
      }
    }
  }
  std::sort(out.kb.begin(), out.kb.end());
  std::sort(all_truths.begin(), all_truths.end());

  for (std::size_t i = 0; i < out.corpus.records.size(); ++i) {
    const auto& t = out.corpus.records[i].triple;
    if (i > 0 && out.corpus.records[i - 1].triple == t) continue;
    out.truth_log.emplace_back(t, std::binary_search(all_truths.begin(), all_truths.end(), t));
  }
  return out;
}

void write_truth_log(const std::vector<std::pair<Triple, bool>>& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError("cannot write " + path);
  for (const auto& [t, truth] : log) {
    out << tsv::join_line({t.subject, t.predicate, t.object, truth ? "1" : "0"}) << '\n';
  }
  if (!out) throw IngestError("write failed: " + path);
}

namespace {

nlohmann::json beta_json(const BetaParams& b) { return {{"alpha", b.alpha}, {"beta", b.beta}}; }

BetaParams beta_from(const nlohmann::json& j, BetaParams def) {
  def.alpha = j.value("alpha", def.alpha);
  def.beta = j.value("beta", def.beta);
  return def;
}

}  // namespace

nlohmann::json synth_config_to_json(const SynthConfig& cfg) {
  nlohmann::json j;
  j["n_items"] = cfg.n_items;
  j["n_predicates"] = cfg.n_predicates;
  j["n_sources"] = cfg.n_sources;
  j["n_sites"] = cfg.n_sites;
  j["n_extractors"] = cfg.n_extractors;
  j["source_accuracy"] = beta_json(cfg.source_accuracy);
  j["fixed_source_accuracy"] =
      cfg.fixed_source_accuracy ? nlohmann::json(*cfg.fixed_source_accuracy) : nlohmann::json(nullptr);
  j["site_predicate_quality"] = cfg.site_predicate_quality;
  j["claims_min"] = cfg.claims_min;
  j["claims_max"] = cfg.claims_max;
  j["extractor_coverage"] = cfg.extractor_coverage;
  j["extractor_recall"] = cfg.extractor_recall;
  auto& ex = j["extractors"] = nlohmann::json::array();
  for (const auto& e : cfg.resolved_extractors()) {
    ex.push_back({{"triple_error", e.triple_error},
                  {"entity_error", e.entity_error},
                  {"predicate_error", e.predicate_error},
                  {"n_patterns", e.n_patterns},
                  {"confidence_correct", beta_json(e.confidence_correct)},
                  {"confidence_wrong", beta_json(e.confidence_wrong)},
                  {"missing_confidence", e.missing_confidence}});
  }
  j["value_domain_size"] = cfg.value_domain_size;
  j["item_popularity"] = cfg.item_popularity;
  j["truths_per_item"] = cfg.truths_per_item;
  j["kb_fraction"] = cfg.kb_fraction;
  j["shared_error_rate"] = cfg.shared_error_rate;
  j["seed"] = cfg.seed;
  return j;
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
  SynthConfig c;
  c.n_items = j.value("n_items", c.n_items);
  c.n_predicates = j.value("n_predicates", c.n_predicates);
  c.n_sources = j.value("n_sources", c.n_sources);
  c.n_sites = j.value("n_sites", c.n_sites);
  c.n_extractors = j.value("n_extractors", c.n_extractors);
  if (j.contains("source_accuracy")) c.source_accuracy = beta_from(j["source_accuracy"], c.source_accuracy);
  if (j.contains("fixed_source_accuracy") && !j["fixed_source_accuracy"].is_null()) {
    c.fixed_source_accuracy = j["fixed_source_accuracy"].get<double>();
  }
  c.site_predicate_quality = j.value("site_predicate_quality", c.site_predicate_quality);
  c.claims_min = j.value("claims_min", c.claims_min);
  c.claims_max = j.value("claims_max", c.claims_max);
  c.extractor_coverage = j.value("extractor_coverage", c.extractor_coverage);
  c.extractor_recall = j.value("extractor_recall", c.extractor_recall);
  if (j.contains("extractors")) {
    for (const auto& e : j["extractors"]) {
      ExtractorProfile p;
      p.triple_error = e.value("triple_error", p.triple_error);
      p.entity_error = e.value("entity_error", p.entity_error);
      p.predicate_error = e.value("predicate_error", p.predicate_error);
      p.n_patterns = e.value("n_patterns", p.n_patterns);
      if (e.contains("confidence_correct")) p.confidence_correct = beta_from(e["confidence_correct"], p.confidence_correct);
      if (e.contains("confidence_wrong")) p.confidence_wrong = beta_from(e["confidence_wrong"], p.confidence_wrong);
      p.missing_confidence = e.value("missing_confidence", p.missing_confidence);
      c.extractors.push_back(p);
    }
  }
  c.value_domain_size = j.value("value_domain_size", c.value_domain_size);
  c.item_popularity = j.value("item_popularity", c.item_popularity);
  if (j.contains("truths_per_item")) c.truths_per_item = j["truths_per_item"].get<std::vector<double>>();
  c.kb_fraction = j.value("kb_fraction", c.kb_fraction);
  c.shared_error_rate = j.value("shared_error_rate", c.shared_error_rate);
  c.seed = j.value("seed", c.seed);
  return c;
}

}  // namespace kfusion
