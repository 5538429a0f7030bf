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

#include "kfusion/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "kfusion/parallel.hpp"
#include "kfusion/tsv.hpp"

namespace kfusion {

namespace {

using Clock = std::chrono::steady_clock;

// Salts keep the Stage I, Stage II and gold sampling streams apart.
constexpr std::uint64_t kStageOneSalt = 0x5354414745310000ULL;
constexpr std::uint64_t kStageTwoSalt = 0x5354414745320000ULL;
constexpr std::uint64_t kGoldSalt = 0x474f4c4400000000ULL;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Length-prefixed so that distinct part lists never share an encoding.
std::string encode_key(const ProvenanceKey& k) {
  std::string out;
  for (const auto& p : k.parts) {
    out += std::to_string(p.size());
    out += ':';
    out += p;
  }
  return out;
}

std::size_t count_distinct(std::vector<std::string_view>& v) {
  std::sort(v.begin(), v.end());
  return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
}

// Interned view of a corpus. Triples keep corpus order (sorted by subject,
// predicate, object), so the triples of one data item are contiguous and
// so are their observations.
struct FusionIndex {
  std::vector<const Triple*> triples;
  std::vector<std::uint32_t> item_begin;       // items -> triples, CSR
  std::vector<std::uint64_t> item_hash;
  std::vector<std::uint32_t> triple_obs_begin;  // triples -> observations, CSR
  std::vector<std::uint64_t> triple_hash;
  std::vector<std::uint32_t> triple_extractors;
  std::vector<std::uint32_t> triple_sources;

  std::vector<ProvenanceKey> provs;
  std::vector<std::uint64_t> prov_hash;
  std::vector<std::uint32_t> prov_obs_begin;  // provenances -> observations, CSR
  std::vector<std::uint32_t> prov_obs;

  std::vector<std::uint32_t> obs_triple;
  std::vector<std::uint32_t> obs_prov;
  std::vector<std::uint64_t> obs_hash;

  std::size_t item_count() const { return item_begin.size() - 1; }
  std::size_t triple_count() const { return triples.size(); }
  std::size_t prov_count() const { return provs.size(); }
};

FusionIndex build_index(const Corpus& c, Granularity g) {
  FusionIndex ix;
  const auto& recs = c.records;

  // Intern provenance keys, then renumber in sorted key order.
  std::vector<std::uint32_t> rec_prov(recs.size());
  std::vector<std::string> keys;
  {
    std::unordered_map<std::string, std::uint32_t> intern;
    intern.reserve(recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
      auto enc = encode_key(provenance_key(recs[i], g));
      auto [it, inserted] = intern.try_emplace(std::move(enc), static_cast<std::uint32_t>(keys.size()));
      if (inserted) keys.push_back(it->first);
      rec_prov[i] = it->second;
    }
  }
  std::vector<std::uint32_t> order(keys.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return keys[a] < keys[b]; });
  std::vector<std::uint32_t> rank(keys.size());
  for (std::uint32_t r = 0; r < order.size(); ++r) rank[order[r]] = r;
  for (auto& p : rec_prov) p = rank[p];
  ix.prov_hash.resize(keys.size());
  ix.provs.resize(keys.size());
  for (std::uint32_t r = 0; r < order.size(); ++r) ix.prov_hash[r] = hash_bytes(keys[order[r]]);
  std::vector<bool> have_key(keys.size(), false);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    auto p = rec_prov[i];
    if (!have_key[p]) {
      ix.provs[p] = provenance_key(recs[i], g);
      have_key[p] = true;
    }
  }

  // Triples, items and observations in one pass over the sorted records.
  ix.item_begin.push_back(0);
  ix.triple_obs_begin.push_back(0);
  std::vector<std::uint32_t> provs_of_triple;
  std::vector<std::string_view> names;
  std::size_t i = 0;
  while (i < recs.size()) {
    std::size_t j = i;
    while (j < recs.size() && recs[j].triple == recs[i].triple) ++j;
    const Triple& t = recs[i].triple;
    if (!ix.triples.empty()) {
      const Triple& prev = *ix.triples.back();
      if (prev.subject != t.subject || prev.predicate != t.predicate) {
        ix.item_begin.push_back(static_cast<std::uint32_t>(ix.triples.size()));
      }
    }
    const auto triple_id = static_cast<std::uint32_t>(ix.triples.size());
    ix.triples.push_back(&t);
    ix.triple_hash.push_back(hash_combine(
        hash_combine(hash_bytes(t.subject), hash_bytes(t.predicate)), hash_bytes(t.object)));

    provs_of_triple.clear();
    for (std::size_t k = i; k < j; ++k) provs_of_triple.push_back(rec_prov[k]);
    std::sort(provs_of_triple.begin(), provs_of_triple.end());
    provs_of_triple.erase(std::unique(provs_of_triple.begin(), provs_of_triple.end()),
                          provs_of_triple.end());
    const auto object_hash = hash_bytes(t.object);
    for (auto p : provs_of_triple) {
      ix.obs_triple.push_back(triple_id);
      ix.obs_prov.push_back(p);
      ix.obs_hash.push_back(hash_combine(object_hash, ix.prov_hash[p]));
    }
    ix.triple_obs_begin.push_back(static_cast<std::uint32_t>(ix.obs_triple.size()));

    names.clear();
    for (std::size_t k = i; k < j; ++k) names.push_back(recs[k].extractor);
    ix.triple_extractors.push_back(static_cast<std::uint32_t>(count_distinct(names)));
    names.clear();
    for (std::size_t k = i; k < j; ++k) names.push_back(recs[k].url);
    ix.triple_sources.push_back(static_cast<std::uint32_t>(count_distinct(names)));
    i = j;
  }
  ix.item_begin.push_back(static_cast<std::uint32_t>(ix.triples.size()));
  for (std::size_t it = 0; it + 1 < ix.item_begin.size(); ++it) {
    const Triple& t = *ix.triples[ix.item_begin[it]];
    ix.item_hash.push_back(hash_combine(hash_bytes(t.subject), hash_bytes(t.predicate)));
  }

  // Provenance -> observations.
  ix.prov_obs_begin.assign(ix.provs.size() + 1, 0);
  for (auto p : ix.obs_prov) ++ix.prov_obs_begin[p + 1];
  std::partial_sum(ix.prov_obs_begin.begin(), ix.prov_obs_begin.end(), ix.prov_obs_begin.begin());
  ix.prov_obs.resize(ix.obs_prov.size());
  std::vector<std::uint32_t> fill(ix.prov_obs_begin.begin(), ix.prov_obs_begin.end() - 1);
  for (std::uint32_t o = 0; o < ix.obs_prov.size(); ++o) ix.prov_obs[fill[ix.obs_prov[o]]++] = o;
  return ix;
}

struct AccuracyState {
  std::vector<double> accuracy;
  std::vector<char> is_default;
};

AccuracyState default_accuracies(const FusionIndex& ix, const FusionParams& params) {
  return {std::vector<double>(ix.prov_count(), params.clamp(params.default_accuracy)),
          std::vector<char>(ix.prov_count(), 1)};
}

void apply_gold(const FusionIndex& ix, const GoldStandard& gold, double sample_rate,
                std::uint64_t seed, const FusionParams& params, AccuracyState& st) {
  if (!(sample_rate > 0.0 && sample_rate <= 1.0)) {
    throw std::invalid_argument("gold sample rate must be in (0, 1]");
  }
  const auto gold_seed = hash_combine(seed, kGoldSalt);
  std::vector<signed char> label(ix.triple_count());
  for (std::size_t t = 0; t < ix.triple_count(); ++t) {
    label[t] = -1;
    if (sample_rate < 1.0 && unit_interval(hash_combine(gold_seed, ix.triple_hash[t])) >= sample_rate) {
      continue;
    }
    auto l = gold.label(*ix.triples[t]);
    if (l != Label::kUnknown) label[t] = l == Label::kTrue ? 1 : 0;
  }
  for (std::size_t p = 0; p < ix.prov_count(); ++p) {
    std::size_t labeled = 0, truths = 0;
    for (auto k = ix.prov_obs_begin[p]; k < ix.prov_obs_begin[p + 1]; ++k) {
      auto l = label[ix.obs_triple[ix.prov_obs[k]]];
      if (l < 0) continue;
      ++labeled;
      truths += static_cast<std::size_t>(l);
    }
    if (labeled == 0) continue;
    st.accuracy[p] = params.clamp(static_cast<double>(truths) / static_cast<double>(labeled));
    st.is_default[p] = 0;
  }
}

AccuracyTable to_table(const FusionIndex& ix, const AccuracyState& st) {
  AccuracyTable table;
  for (std::size_t p = 0; p < ix.prov_count(); ++p) {
    table.emplace_hint(table.end(), ix.provs[p],
                       AccuracyEntry{st.accuracy[p], ix.prov_obs_begin[p + 1] - ix.prov_obs_begin[p],
                                     st.is_default[p] != 0});
  }
  return table;
}

struct Scratch {
  std::vector<std::uint32_t> obs;
  std::vector<std::uint64_t> hashes;
  std::vector<std::uint32_t> value_of_triple;
  std::vector<kernel::Evidence> evidence;
  std::vector<double> probs;
  std::vector<double> prior;
  std::vector<double> pop;
};

class Executor {
 public:
  Executor(const FusionIndex& ix, const PipelineConfig& cfg) : ix_(ix), cfg_(cfg) {}

  FusionRun run(AccuracyState st) {
    FusionRun out;
    const auto t_start = Clock::now();
    prob_.assign(ix_.triple_count(), 0.0);
    has_prob_.assign(ix_.triple_count(), 0);
    const int rounds = cfg_.method == Method::kVote ? 1 : cfg_.rounds;

    for (int round = 1; round <= rounds; ++round) {
      const auto t_round = Clock::now();
      prev_prob_.swap(prob_);
      prev_has_prob_.swap(has_prob_);
      prob_.assign(ix_.triple_count(), 0.0);
      has_prob_.assign(ix_.triple_count(), 0);

      RoundDiagnostics diag;
      diag.round = round;
      diag.provenances = ix_.prov_count();
      for (std::size_t p = 0; p < ix_.prov_count(); ++p) {
        if (excluded(st, p, round)) ++diag.filtered_provenances;
      }

      stage_one(st, round);
      diag.coverage = coverage();

      if (cfg_.method != Method::kVote) {
        AccuracyState next = stage_two(st, round);
        for (std::size_t p = 0; p < ix_.prov_count(); ++p) {
          diag.max_accuracy_delta =
              std::max(diag.max_accuracy_delta, std::abs(next.accuracy[p] - st.accuracy[p]));
        }
        st = std::move(next);
      }
      diag.default_provenances =
          static_cast<std::size_t>(std::count(st.is_default.begin(), st.is_default.end(), 1));
      diag.wall_seconds = seconds_since(t_round);
      out.rounds.push_back(diag);

      if (cfg_.method != Method::kVote && diag.max_accuracy_delta < cfg_.accuracy_delta_stop) {
        out.converged = true;
        break;
      }
    }

    out.result = stage_three();
    out.accuracies = to_table(ix_, st);
    out.wall_seconds = seconds_since(t_start);
    return out;
  }

 private:
  bool theta_active() const {
    return cfg_.method != Method::kVote && cfg_.min_prov_accuracy.has_value();
  }

  bool coverage_active() const { return cfg_.method != Method::kVote && cfg_.filter_coverage; }

  // Provenance-level exclusion from Stage I. The round-1 coverage rule is
  // item-level and handled separately.
  bool excluded(const AccuracyState& st, std::size_t p, int round) const {
    if (coverage_active() && round > 1 && st.is_default[p]) return true;
    if (theta_active() && st.accuracy[p] < *cfg_.min_prov_accuracy) return true;
    return false;
  }

  // Round 1 of the coverage filter: an item takes part only when one of its
  // triples is extracted by more than one provenance, or when one of its
  // provenances already has a non-default accuracy (gold initialization).
  bool eligible_round_one(const AccuracyState& st, std::size_t item) const {
    for (auto t = ix_.item_begin[item]; t < ix_.item_begin[item + 1]; ++t) {
      if (ix_.triple_obs_begin[t + 1] - ix_.triple_obs_begin[t] >= 2) return true;
      for (auto o = ix_.triple_obs_begin[t]; o < ix_.triple_obs_begin[t + 1]; ++o) {
        if (!st.is_default[ix_.obs_prov[o]]) return true;
      }
    }
    return false;
  }

  void stage_one(const AccuracyState& st, int round) {
    std::vector<Scratch> scratch(std::max(1u, cfg_.workers));
    parallel_for_blocks(ix_.item_count(), cfg_.workers,
                        [&](unsigned w, std::size_t begin, std::size_t end) {
                          for (std::size_t item = begin; item < end; ++item) {
                            fuse_item(st, round, item, scratch[w]);
                          }
                        });
  }

  void fuse_item(const AccuracyState& st, int round, std::size_t item, Scratch& s) {
    const auto tb = ix_.item_begin[item];
    const auto te = ix_.item_begin[item + 1];
    if (coverage_active() && round == 1 && !eligible_round_one(st, item)) return;

    s.obs.clear();
    for (auto o = ix_.triple_obs_begin[tb]; o < ix_.triple_obs_begin[te]; ++o) {
      if (!excluded(st, ix_.obs_prov[o], round)) s.obs.push_back(o);
    }

    if (s.obs.empty()) {
      if (theta_active()) fallback_to_mean_accuracy(st, tb, te);
      return;
    }

    // Dense value indices over the triples that kept at least one
    // observation; sampling below never removes a value from this set.
    s.value_of_triple.assign(te - tb, UINT32_MAX);
    std::uint32_t n_values = 0;
    for (auto o : s.obs) {
      auto& v = s.value_of_triple[ix_.obs_triple[o] - tb];
      if (v == UINT32_MAX) v = n_values++;
    }

    if (s.obs.size() > cfg_.sample_limit) {
      s.hashes.clear();
      for (auto o : s.obs) s.hashes.push_back(ix_.obs_hash[o]);
      auto seed = hash_combine(hash_combine(cfg_.seed, kStageOneSalt + round), ix_.item_hash[item]);
      auto keep = sample_positions(s.hashes, cfg_.sample_limit, seed);
      for (std::size_t k = 0; k < keep.size(); ++k) s.obs[k] = s.obs[keep[k]];
      s.obs.resize(keep.size());
    }

    s.evidence.clear();
    for (auto o : s.obs) {
      s.evidence.push_back({s.value_of_triple[ix_.obs_triple[o] - tb], st.accuracy[ix_.obs_prov[o]]});
    }
    s.probs.assign(n_values, 0.0);
    switch (cfg_.method) {
      case Method::kVote:
        kernel::vote(s.evidence, n_values, s.probs);
        break;
      case Method::kAccu:
        kernel::accu(s.evidence, n_values, cfg_.params, s.probs);
        break;
      case Method::kPopAccu: {
        s.prior.clear();
        bool any_prior = false;
        if (round > 1) {
          s.prior.assign(n_values, 0.0);
          for (auto t = tb; t < te; ++t) {
            auto v = s.value_of_triple[t - tb];
            if (v == UINT32_MAX || !prev_has_prob_[t]) continue;
            s.prior[v] = prev_prob_[t];
            any_prior = true;
          }
          if (!any_prior) s.prior.clear();
        }
        s.pop.assign(n_values, 0.0);
        kernel::popularity(s.evidence, n_values, s.prior, s.pop);
        kernel::popaccu(s.evidence, n_values, s.pop, cfg_.params, s.probs);
        break;
      }
    }
    for (auto t = tb; t < te; ++t) {
      auto v = s.value_of_triple[t - tb];
      if (v == UINT32_MAX) continue;
      prob_[t] = s.probs[v];
      has_prob_[t] = 1;
    }
  }

  // The item lost every provenance: each triple takes the mean accuracy of
  // its provenances. Under the coverage filter only evaluated (non-default)
  // accuracies count; with none left the triple stays without probability.
  void fallback_to_mean_accuracy(const AccuracyState& st, std::uint32_t tb, std::uint32_t te) {
    for (auto t = tb; t < te; ++t) {
      double sum = 0.0;
      std::size_t n = 0;
      for (auto o = ix_.triple_obs_begin[t]; o < ix_.triple_obs_begin[t + 1]; ++o) {
        auto p = ix_.obs_prov[o];
        if (coverage_active() && st.is_default[p]) continue;
        sum += st.accuracy[p];
        ++n;
      }
      if (n == 0) continue;
      prob_[t] = sum / static_cast<double>(n);
      has_prob_[t] = 1;
    }
  }

  AccuracyState stage_two(const AccuracyState& st, int round) {
    AccuracyState next = st;
    std::vector<std::vector<double>> values(std::max(1u, cfg_.workers));
    std::vector<std::vector<std::uint64_t>> hashes(std::max(1u, cfg_.workers));
    parallel_for_blocks(ix_.prov_count(), cfg_.workers,
                        [&](unsigned w, std::size_t begin, std::size_t end) {
      auto& probs = values[w];
      auto& hs = hashes[w];
      for (std::size_t p = begin; p < end; ++p) {
        probs.clear();
        hs.clear();
        for (auto k = ix_.prov_obs_begin[p]; k < ix_.prov_obs_begin[p + 1]; ++k) {
          auto o = ix_.prov_obs[k];
          auto t = ix_.obs_triple[o];
          if (!has_prob_[t]) continue;
          probs.push_back(prob_[t]);
          hs.push_back(ix_.obs_hash[o]);
        }
        if (probs.empty()) continue;
        if (probs.size() > cfg_.sample_limit) {
          auto seed = hash_combine(hash_combine(cfg_.seed, kStageTwoSalt + round), ix_.prov_hash[p]);
          auto keep = sample_positions(hs, cfg_.sample_limit, seed);
          for (std::size_t k = 0; k < keep.size(); ++k) probs[k] = probs[keep[k]];
          probs.resize(keep.size());
        }
        next.accuracy[p] = provenance_accuracy(probs, cfg_.params);
        next.is_default[p] = 0;
      }
    });
    return next;
  }

  double coverage() const {
    if (ix_.triple_count() == 0) return 0.0;
    auto n = std::count(has_prob_.begin(), has_prob_.end(), 1);
    return static_cast<double>(n) / static_cast<double>(ix_.triple_count());
  }

  FusionResult stage_three() const {
    FusionResult r;
    r.rows.resize(ix_.triple_count());
    for (std::size_t t = 0; t < ix_.triple_count(); ++t) {
      auto& row = r.rows[t];
      row.triple = *ix_.triples[t];
      if (has_prob_[t]) row.probability = prob_[t];
      row.provenance_count = ix_.triple_obs_begin[t + 1] - ix_.triple_obs_begin[t];
      row.extractor_count = ix_.triple_extractors[t];
      row.source_count = ix_.triple_sources[t];
    }
    r.coverage = coverage();
    return r;
  }

  const FusionIndex& ix_;
  const PipelineConfig& cfg_;
  std::vector<double> prob_, prev_prob_;
  std::vector<char> has_prob_, prev_has_prob_;
};

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::kVote:
      return "vote";
    case Method::kAccu:
      return "accu";
    case Method::kPopAccu:
      return "popaccu";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view name) {
  for (auto m : {Method::kVote, Method::kAccu, Method::kPopAccu}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

void PipelineConfig::validate() const {
  params.validate();
  if (rounds < 1) throw std::invalid_argument("rounds must be >= 1");
  if (sample_limit < 1) throw std::invalid_argument("sample limit must be >= 1");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (min_prov_accuracy && !(*min_prov_accuracy >= 0.0 && *min_prov_accuracy <= 1.0)) {
    throw std::invalid_argument("min provenance accuracy must be in [0, 1]");
  }
  if (gold_init) {
    if (!gold_init->gold) throw std::invalid_argument("gold initialization without gold standard");
    if (!(gold_init->sample_rate > 0.0 && gold_init->sample_rate <= 1.0)) {
      throw std::invalid_argument("gold sample rate must be in (0, 1]");
    }
  }
  if (method == Method::kVote && (filter_coverage || min_prov_accuracy || gold_init)) {
    throw std::invalid_argument("provenance filters and gold initialization need accu or popaccu");
  }
}

PipelineConfig popaccu_plus_preset(std::shared_ptr<const GoldStandard> gold, double sample_rate) {
  PipelineConfig cfg;
  cfg.method = Method::kPopAccu;
  cfg.filter_coverage = true;
  cfg.granularity = Granularity::kExtractorSitePredicatePattern;
  cfg.min_prov_accuracy = 0.5;
  if (gold) cfg.gold_init = GoldInit{std::move(gold), sample_rate};
  return cfg;
}

std::uint64_t group_seed(std::uint64_t seed, std::string_view group_key, std::uint64_t salt) {
  return hash_combine(hash_combine(seed, salt), hash_bytes(group_key));
}

std::vector<std::uint32_t> sample_positions(std::span<const std::uint64_t> item_hashes,
                                            std::size_t limit, std::uint64_t seed) {
  std::vector<std::uint32_t> pos(item_hashes.size());
  std::iota(pos.begin(), pos.end(), 0u);
  if (item_hashes.size() <= limit) return pos;
  std::vector<std::uint64_t> key(item_hashes.size());
  for (std::size_t i = 0; i < key.size(); ++i) key[i] = hash_combine(seed, item_hashes[i]);
  auto cmp = [&](std::uint32_t a, std::uint32_t b) {
    return key[a] != key[b] ? key[a] < key[b] : a < b;
  };
  std::nth_element(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(limit), pos.end(), cmp);
  pos.resize(limit);
  std::sort(pos.begin(), pos.end());
  return pos;
}

FusionRun run_fusion(const Corpus& c, const PipelineConfig& cfg) {
  cfg.validate();
  if (c.records.empty()) throw FusionError("empty corpus");
  const bool sorted = std::is_sorted(c.records.begin(), c.records.end(),
                                     [](const auto& a, const auto& b) { return a.triple < b.triple; });
  if (!sorted) return run_fusion(make_corpus(c.records), cfg);
  FusionIndex ix = build_index(c, cfg.granularity);
  AccuracyState st = default_accuracies(ix, cfg.params);
  if (cfg.gold_init) {
    apply_gold(ix, *cfg.gold_init->gold, cfg.gold_init->sample_rate, cfg.seed, cfg.params, st);
  }
  return Executor(ix, cfg).run(std::move(st));
}

AccuracyTable init_accuracies_from_gold(const Corpus& c, Granularity g, const GoldStandard& gold,
                                        double sample_rate, const FusionParams& params,
                                        std::uint64_t seed) {
  FusionIndex ix = build_index(c, g);
  AccuracyState st = default_accuracies(ix, params);
  apply_gold(ix, gold, sample_rate, seed, params, st);
  return to_table(ix, st);
}

std::string format_probabilities(const FusionResult& r) {
  std::string out;
  for (const auto& row : r.rows) {
    out += tsv::join_line({row.triple.subject, row.triple.predicate, row.triple.object,
                           row.probability ? tsv::format_fixed(*row.probability, 9) : std::string()});
    out += '\n';
  }
  return out;
}

void write_probabilities(const FusionResult& r, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError("cannot write " + path);
  out << format_probabilities(r);
  if (!out) throw IngestError("write failed: " + path);
}

PredictionFile parse_probabilities_text(std::string_view text) {
  PredictionFile f;
  tsv::for_each_line(text, [&](std::string_view line) {
    ++f.report.lines;
    auto fields = tsv::split_line(line);
    if (fields.size() != 4 || fields[0].empty() || fields[1].empty()) {
      ++f.report.malformed;
      return;
    }
    PredictionRow row{{std::move(fields[0]), std::move(fields[1]), std::move(fields[2])}, {}};
    if (!fields[3].empty()) {
      auto p = tsv::parse_double(fields[3]);
      if (!p || *p < 0.0 || *p > 1.0) {
        ++f.report.malformed;
        return;
      }
      row.probability = *p;
    }
    f.rows.push_back(std::move(row));
  });
  return f;
}

PredictionFile parse_probabilities(const std::string& path) {
  return parse_probabilities_text(tsv::read_file(path));
}

nlohmann::json config_to_json(const PipelineConfig& cfg) {
  nlohmann::json j;
  j["method"] = std::string(to_string(cfg.method));
  j["granularity"] = std::string(to_string(cfg.granularity));
  j["n_false"] = cfg.params.n_false;
  j["default_accuracy"] = cfg.params.default_accuracy;
  j["epsilon"] = cfg.params.epsilon;
  j["rounds"] = cfg.rounds;
  j["sample_limit"] = cfg.sample_limit;
  j["filter_coverage"] = cfg.filter_coverage;
  j["min_prov_accuracy"] =
      cfg.min_prov_accuracy ? nlohmann::json(*cfg.min_prov_accuracy) : nlohmann::json(nullptr);
  j["gold_init"] = cfg.gold_init.has_value();
  j["gold_sample_rate"] =
      cfg.gold_init ? nlohmann::json(cfg.gold_init->sample_rate) : nlohmann::json(nullptr);
  j["accuracy_delta_stop"] = cfg.accuracy_delta_stop;
  j["seed"] = cfg.seed;
  j["workers"] = cfg.workers;
  return j;
}

nlohmann::json diagnostics_to_json(const FusionRun& run) {
  nlohmann::json j;
  j["converged"] = run.converged;
  j["wall_seconds"] = run.wall_seconds;
  j["triples"] = run.result.rows.size();
  j["provenances"] = run.accuracies.size();
  j["coverage"] = run.result.coverage;
  auto& rounds = j["rounds"] = nlohmann::json::array();
  for (const auto& r : run.rounds) {
    rounds.push_back({{"round", r.round},
                      {"max_accuracy_delta", r.max_accuracy_delta},
                      {"provenances", r.provenances},
                      {"filtered_provenances", r.filtered_provenances},
                      {"default_provenances", r.default_provenances},
                      {"coverage", r.coverage},
                      {"wall_seconds", r.wall_seconds}});
  }
  return j;
}

}  // namespace kfusion
