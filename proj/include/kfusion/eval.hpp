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
// Metric suite: calibration buckets with (weighted) deviation, PR curve and
// its area, Kappa agreement between extractors, and accuracy broken down by
// support strata.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kfusion/gold.hpp"
#include "kfusion/ingest.hpp"
#include "kfusion/model.hpp"
#include "kfusion/pipeline.hpp"

namespace kfusion {

class EvalError : public Error {
 public:
  using Error::Error;
};

// A triple that has both a predicted probability and a True/False label.
struct LabeledPrediction {
  double probability = 0.0;
  bool truth = false;
};

// Keeps rows with a probability whose triple is labeled True or False.
std::vector<LabeledPrediction> join_predictions(std::span<const PredictionRow> preds,
                                                const GoldStandard& gold);
std::vector<LabeledPrediction> join_predictions(const FusionResult& result,
                                                const GoldStandard& gold);

struct CalibrationBucket {
  double low = 0.0;
  double high = 0.0;  // exclusive, except the last bucket which is [1, 1]
  std::size_t count = 0;
  std::size_t true_count = 0;
  double mean_predicted = 0.0;                // meaningful only when count > 0
  std::optional<double> real_probability;     // absent for empty buckets
};

struct CalibrationReport {
  int l = 20;
  std::vector<CalibrationBucket> buckets;  // l + 1 entries
  double deviation = 0.0;
  double weighted_deviation = 0.0;
};

// Bucket index for a probability: floor(p * l), with p == 1 in bucket l.
std::size_t bucket_index(double p, int l);

// Throws EvalError when nothing participates or l < 1.
CalibrationReport calibration(std::span<const LabeledPrediction> preds, int l = 20);

// Mean over occupied buckets of (mean_predicted - real)^2; the weighted form
// weighs buckets by their size.
double deviation(const CalibrationReport& r);
double weighted_deviation(const CalibrationReport& r);

struct PRReport {
  std::vector<std::pair<double, double>> points;  // (recall, precision)
  double auc_pr = 0.0;
};

// Descending probability, tied probabilities taken as one group. The area
// is trapezoidal over recall, starting from (0, precision of first point).
// Throws EvalError when there is no true label.
PRReport pr_curve(std::span<const LabeledPrediction> preds);

// Chance-corrected overlap of two triple sets relative to a universe of size
// kb_size. Throws EvalError on a zero denominator.
double kappa(std::size_t t1, std::size_t t2, std::size_t both, std::size_t kb_size);
double kappa(std::span<const Triple> t1, std::span<const Triple> t2, std::size_t kb_size);

struct KappaRow {
  std::string extractor_a;
  std::string extractor_b;
  double kappa = 0.0;
};

// Every extractor pair, with the corpus's unique triples as the universe.
std::vector<KappaRow> extractor_kappa(const Corpus& c);

enum class StratumKey { kProvenances, kExtractors, kSources, kConfidence, kPredicate };

std::string_view to_string(StratumKey k);

struct StratumRow {
  std::string stratum;
  std::size_t triple_count = 0;  // labeled triples
  double accuracy = 0.0;
};

// Label of a support count: the number itself up to 10, then
// logarithmic ranges "11-100", "101-1000", ...
std::string count_stratum(std::size_t n);

// Provenances are (extractor, url) pairs. Confidence strata use the maximum
// confidence of a triple in steps of 0.1; triples without any confidence
// fall in "none". Rows are sorted by stratum order.
std::vector<StratumRow> accuracy_by_stratum(const Corpus& c, const LabelMap& labels,
                                            StratumKey key);

// Two-dimensional table: stratum label "<provenances>x<extractors>".
std::vector<StratumRow> accuracy_by_provenances_and_extractors(const Corpus& c,
                                                               const LabelMap& labels);

struct ConfidenceCoverageRow {
  double threshold = 0.0;
  double record_coverage = 0.0;  // fraction of records retained
  double triple_coverage = 0.0;  // fraction of unique triples retained
  std::optional<double> accuracy;  // among retained labeled triples
};

ConfidenceCoverageRow confidence_coverage(const Corpus& c, const LabelMap& labels,
                                          double threshold);
std::vector<ConfidenceCoverageRow> confidence_coverage_sweep(const Corpus& c,
                                                             const LabelMap& labels);

// CSV writers: header row, comma-separated, probabilities with 6 decimals.
std::string calibration_csv(const CalibrationReport& r);
std::string pr_csv(const PRReport& r);
std::string kappa_csv(std::span<const KappaRow> rows);
std::string strata_csv(std::span<const StratumRow> rows);
std::string confidence_coverage_csv(std::span<const ConfidenceCoverageRow> rows);

}  // namespace kfusion
