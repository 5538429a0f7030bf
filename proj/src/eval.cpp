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

#include "kfusion/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include "kfusion/tsv.hpp"

namespace kfusion {

namespace {

std::string fmt6(double v) { return tsv::format_fixed(v, 6); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

struct TripleSupport {
  std::size_t provenances = 0;
  std::size_t extractors = 0;
  std::size_t sources = 0;
  std::optional<double> confidence;  // max over records
  const Triple* triple = nullptr;
};

// Per unique triple, in corpus order. Records are sorted by triple first.
std::vector<TripleSupport> support_of(const Corpus& c) {
  std::vector<TripleSupport> out;
  const auto& recs = c.records;
  std::vector<std::string_view> ext, url;
  std::vector<std::pair<std::string_view, std::string_view>> prov;
  for (std::size_t i = 0; i < recs.size();) {
    std::size_t j = i;
    ext.clear();
    url.clear();
    prov.clear();
    TripleSupport s;
    s.triple = &recs[i].triple;
    for (; j < recs.size() && recs[j].triple == recs[i].triple; ++j) {
      ext.push_back(recs[j].extractor);
      url.push_back(recs[j].url);
      prov.emplace_back(recs[j].extractor, recs[j].url);
      if (recs[j].confidence && (!s.confidence || *recs[j].confidence > *s.confidence)) {
        s.confidence = recs[j].confidence;
      }
    }
    auto distinct = [](auto& v) {
      std::sort(v.begin(), v.end());
      return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
    };
    s.extractors = distinct(ext);
    s.sources = distinct(url);
    s.provenances = distinct(prov);
    out.push_back(s);
    i = j;
  }
  return out;
}

std::optional<bool> truth_of(const LabelMap& labels, const Triple& t) {
  auto it = labels.find(t);
  if (it == labels.end() || it->second == Label::kUnknown) return std::nullopt;
  return it->second == Label::kTrue;
}

std::string confidence_stratum(const std::optional<double>& c) {
  if (!c) return "none";
  int b = std::min(9, static_cast<int>(std::floor(*c * 10.0)));
  return tsv::format_fixed(b / 10.0, 1) + "-" + tsv::format_fixed((b + 1) / 10.0, 1);
}

struct StratumAcc {
  std::size_t n = 0;
  std::size_t truths = 0;
};

// Sort key: numeric strata by value, then text strata lexicographically.
struct StratumOrder {
  double rank;
  std::string label;
  auto operator<=>(const StratumOrder&) const = default;
};

std::vector<StratumRow> finish(const std::map<StratumOrder, StratumAcc>& acc) {
  std::vector<StratumRow> rows;
  for (const auto& [k, a] : acc) {
    rows.push_back({k.label, a.n, a.n ? static_cast<double>(a.truths) / a.n : 0.0});
  }
  return rows;
}

}  // namespace

std::vector<LabeledPrediction> join_predictions(std::span<const PredictionRow> preds,
                                                const GoldStandard& gold) {
  std::vector<LabeledPrediction> out;
  for (const auto& row : preds) {
    if (!row.probability) continue;
    auto l = gold.label(row.triple);
    if (l == Label::kUnknown) continue;
    out.push_back({*row.probability, l == Label::kTrue});
  }
  return out;
}

std::vector<LabeledPrediction> join_predictions(const FusionResult& result,
                                                const GoldStandard& gold) {
  std::vector<LabeledPrediction> out;
  for (const auto& row : result.rows) {
    if (!row.probability) continue;
    auto l = gold.label(row.triple);
    if (l == Label::kUnknown) continue;
    out.push_back({*row.probability, l == Label::kTrue});
  }
  return out;
}

std::size_t bucket_index(double p, int l) {
  if (p >= 1.0) return static_cast<std::size_t>(l);
  if (p <= 0.0) return 0;
  auto i = static_cast<std::size_t>(std::floor(p * l));
  return std::min(i, static_cast<std::size_t>(l - 1));
}

CalibrationReport calibration(std::span<const LabeledPrediction> preds, int l) {
  if (l < 1) throw EvalError("bucket count must be >= 1");
  if (preds.empty()) throw EvalError("no labeled triples with a predicted probability");
  CalibrationReport r;
  r.l = l;
  r.buckets.resize(static_cast<std::size_t>(l) + 1);
  for (int i = 0; i < l; ++i) {
    r.buckets[i].low = static_cast<double>(i) / l;
    r.buckets[i].high = static_cast<double>(i + 1) / l;
  }
  r.buckets[l].low = r.buckets[l].high = 1.0;

  // Sorted so the per-bucket sums do not depend on input order.
  std::vector<LabeledPrediction> sorted(preds.begin(), preds.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return a.probability != b.probability ? a.probability < b.probability : a.truth < b.truth;
  });
  std::vector<double> sums(r.buckets.size(), 0.0);
  for (const auto& p : sorted) {
    auto i = bucket_index(p.probability, l);
    ++r.buckets[i].count;
    r.buckets[i].true_count += p.truth ? 1 : 0;
    sums[i] += p.probability;
  }
  for (std::size_t i = 0; i < r.buckets.size(); ++i) {
    auto& b = r.buckets[i];
    if (b.count == 0) continue;
    b.mean_predicted = sums[i] / static_cast<double>(b.count);
    b.real_probability = static_cast<double>(b.true_count) / static_cast<double>(b.count);
  }
  r.deviation = deviation(r);
  r.weighted_deviation = weighted_deviation(r);
  return r;
}

double deviation(const CalibrationReport& r) {
  double sum = 0.0;
  std::size_t occupied = 0;
  for (const auto& b : r.buckets) {
    if (b.count == 0) continue;
    double d = b.mean_predicted - *b.real_probability;
    sum += d * d;
    ++occupied;
  }
  return occupied ? sum / static_cast<double>(occupied) : 0.0;
}

double weighted_deviation(const CalibrationReport& r) {
  double sum = 0.0;
  std::size_t total = 0;
  for (const auto& b : r.buckets) {
    if (b.count == 0) continue;
    double d = b.mean_predicted - *b.real_probability;
    sum += static_cast<double>(b.count) * d * d;
    total += b.count;
  }
  return total ? sum / static_cast<double>(total) : 0.0;
}

PRReport pr_curve(std::span<const LabeledPrediction> preds) {
  std::vector<LabeledPrediction> sorted(preds.begin(), preds.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.probability > b.probability; });
  std::size_t positives = 0;
  for (const auto& p : sorted) positives += p.truth ? 1 : 0;
  if (positives == 0) throw EvalError("PR curve needs at least one true label");

  PRReport r;
  std::size_t tp = 0;
  std::size_t seen = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    for (; j < sorted.size() && sorted[j].probability == sorted[i].probability; ++j) {
      tp += sorted[j].truth ? 1 : 0;
    }
    seen = j;
    r.points.emplace_back(static_cast<double>(tp) / positives, static_cast<double>(tp) / seen);
    i = j;
  }
  double prev_recall = 0.0;
  double prev_precision = r.points.front().second;
  for (const auto& [recall, precision] : r.points) {
    r.auc_pr += (recall - prev_recall) * (precision + prev_precision) / 2.0;
    prev_recall = recall;
    prev_precision = precision;
  }
  r.auc_pr = std::clamp(r.auc_pr, 0.0, 1.0);
  return r;
}

double kappa(std::size_t t1, std::size_t t2, std::size_t both, std::size_t kb_size) {
  using wide = __int128;
  wide num = static_cast<wide>(both) * kb_size - static_cast<wide>(t1) * t2;
  wide den = static_cast<wide>(kb_size) * kb_size - static_cast<wide>(t1) * t2;
  if (den == 0) throw EvalError("kappa undefined: |KB|^2 == |T1|*|T2|");
  return static_cast<double>(static_cast<long double>(num) / static_cast<long double>(den));
}

double kappa(std::span<const Triple> t1, std::span<const Triple> t2, std::size_t kb_size) {
  std::set<Triple> a(t1.begin(), t1.end());
  std::set<Triple> b(t2.begin(), t2.end());
  std::size_t both = 0;
  for (const auto& t : a) both += b.count(t);
  return kappa(a.size(), b.size(), both, kb_size);
}

std::vector<KappaRow> extractor_kappa(const Corpus& c) {
  // Triple ids follow corpus order, so each extractor's list is sorted.
  std::map<std::string, std::vector<std::uint32_t>> by_extractor;
  std::uint32_t id = 0;
  for (std::size_t i = 0; i < c.records.size(); ++i) {
    if (i > 0 && !(c.records[i].triple == c.records[i - 1].triple)) ++id;
    auto& v = by_extractor[c.records[i].extractor];
    if (v.empty() || v.back() != id) v.push_back(id);
  }
  const std::size_t universe = c.records.empty() ? 0 : id + 1;
  std::vector<KappaRow> rows;
  for (auto a = by_extractor.begin(); a != by_extractor.end(); ++a) {
    for (auto b = std::next(a); b != by_extractor.end(); ++b) {
      std::vector<std::uint32_t> both;
      std::set_intersection(a->second.begin(), a->second.end(), b->second.begin(),
                            b->second.end(), std::back_inserter(both));
      rows.push_back({a->first, b->first,
                      kappa(a->second.size(), b->second.size(), both.size(), universe)});
    }
  }
  return rows;
}

std::string_view to_string(StratumKey k) {
  switch (k) {
    case StratumKey::kProvenances:
      return "provenances";
    case StratumKey::kExtractors:
      return "extractors";
    case StratumKey::kSources:
      return "sources";
    case StratumKey::kConfidence:
      return "confidence";
    case StratumKey::kPredicate:
      return "predicate";
  }
  return "unknown";
}

std::string count_stratum(std::size_t n) {
  if (n <= 10) return std::to_string(n);
  std::size_t hi = 100;
  while (n > hi) hi *= 10;
  return std::to_string(hi / 10 + 1) + "-" + std::to_string(hi);
}

namespace {

double count_rank(std::size_t n) {
  if (n <= 10) return static_cast<double>(n);
  std::size_t hi = 100;
  while (n > hi) hi *= 10;
  return static_cast<double>(hi);
}

}  // namespace

std::vector<StratumRow> accuracy_by_stratum(const Corpus& c, const LabelMap& labels,
                                            StratumKey key) {
  std::map<StratumOrder, StratumAcc> acc;
  for (const auto& s : support_of(c)) {
    auto truth = truth_of(labels, *s.triple);
    if (!truth) continue;
    StratumOrder k;
    switch (key) {
      case StratumKey::kProvenances:
        k = {count_rank(s.provenances), count_stratum(s.provenances)};
        break;
      case StratumKey::kExtractors:
        k = {count_rank(s.extractors), count_stratum(s.extractors)};
        break;
      case StratumKey::kSources:
        k = {count_rank(s.sources), count_stratum(s.sources)};
        break;
      case StratumKey::kConfidence:
        k = {s.confidence ? std::min(0.9, std::floor(*s.confidence * 10.0) / 10.0) : 2.0,
             confidence_stratum(s.confidence)};
        break;
      case StratumKey::kPredicate:
        k = {0.0, s.triple->predicate};
        break;
    }
    auto& a = acc[k];
    ++a.n;
    a.truths += *truth ? 1 : 0;
  }
  return finish(acc);
}

std::vector<StratumRow> accuracy_by_provenances_and_extractors(const Corpus& c,
                                                               const LabelMap& labels) {
  std::map<std::pair<double, double>, std::pair<std::string, StratumAcc>> acc;
  for (const auto& s : support_of(c)) {
    auto truth = truth_of(labels, *s.triple);
    if (!truth) continue;
    auto& [label, a] = acc[{count_rank(s.provenances), count_rank(s.extractors)}];
    label = count_stratum(s.provenances) + "x" + count_stratum(s.extractors);
    ++a.n;
    a.truths += *truth ? 1 : 0;
  }
  std::vector<StratumRow> rows;
  for (const auto& [k, v] : acc) {
    rows.push_back({v.first, v.second.n,
                    v.second.n ? static_cast<double>(v.second.truths) / v.second.n : 0.0});
  }
  return rows;
}

ConfidenceCoverageRow confidence_coverage(const Corpus& c, const LabelMap& labels,
                                          double threshold) {
  ConfidenceCoverageRow row;
  row.threshold = threshold;
  std::size_t retained_records = 0, triples = 0, retained_triples = 0, labeled = 0, truths = 0;
  for (std::size_t i = 0; i < c.records.size();) {
    std::size_t j = i;
    bool kept = false;
    for (; j < c.records.size() && c.records[j].triple == c.records[i].triple; ++j) {
      const auto& conf = c.records[j].confidence;
      if (!conf || *conf >= threshold) {
        ++retained_records;
        kept = true;
      }
    }
    ++triples;
    if (kept) {
      ++retained_triples;
      if (auto t = truth_of(labels, c.records[i].triple)) {
        ++labeled;
        truths += *t ? 1 : 0;
      }
    }
    i = j;
  }
  if (!c.records.empty()) {
    row.record_coverage = static_cast<double>(retained_records) / c.records.size();
    row.triple_coverage = static_cast<double>(retained_triples) / triples;
  }
  if (labeled) row.accuracy = static_cast<double>(truths) / labeled;
  return row;
}

std::vector<ConfidenceCoverageRow> confidence_coverage_sweep(const Corpus& c,
                                                             const LabelMap& labels) {
  std::vector<ConfidenceCoverageRow> rows;
  for (int i = 0; i <= 10; ++i) rows.push_back(confidence_coverage(c, labels, i / 10.0));
  return rows;
}

std::string calibration_csv(const CalibrationReport& r) {
  std::string out = "bucket_low,bucket_high,count,mean_predicted,real_probability\n";
  for (const auto& b : r.buckets) {
    out += fmt6(b.low) + "," + fmt6(b.high) + "," + std::to_string(b.count) + ",";
    if (b.count) out += fmt6(b.mean_predicted) + "," + fmt6(*b.real_probability);
    else out += ",";
    out += "\n";
  }
  return out;
}

std::string pr_csv(const PRReport& r) {
  std::string out = "recall,precision\n";
  for (const auto& [recall, precision] : r.points) out += fmt6(recall) + "," + fmt6(precision) + "\n";
  return out;
}

std::string kappa_csv(std::span<const KappaRow> rows) {
  std::string out = "extractor_a,extractor_b,kappa\n";
  for (const auto& r : rows) {
    out += csv_field(r.extractor_a) + "," + csv_field(r.extractor_b) + "," + fmt6(r.kappa) + "\n";
  }
  return out;
}

std::string strata_csv(std::span<const StratumRow> rows) {
  std::string out = "stratum,count,accuracy\n";
  for (const auto& r : rows) {
    out += csv_field(r.stratum) + "," + std::to_string(r.triple_count) + "," + fmt6(r.accuracy) + "\n";
  }
  return out;
}

std::string confidence_coverage_csv(std::span<const ConfidenceCoverageRow> rows) {
  std::string out = "threshold,record_coverage,triple_coverage,accuracy\n";
  for (const auto& r : rows) {
    out += fmt6(r.threshold) + "," + fmt6(r.record_coverage) + "," + fmt6(r.triple_coverage) + ",";
    if (r.accuracy) out += fmt6(*r.accuracy);
    out += "\n";
  }
  return out;
}

}  // namespace kfusion
