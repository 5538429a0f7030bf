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
// Per-data-item estimators: Vote, Accu and PopAccu, provenance accuracy
// recomputation and a brute-force posterior used to check them.
//
// Accu model: a data item has one true value among N+1 candidates, uniform
// prior. A provenance with accuracy A reports the truth with probability A
// and each of the N false values with probability (1-A)/N. The posterior of
// an observed value v is
//
//   P(v) = exp(C(v)) / (sum_{v' in V} exp(C(v')) + max(0, N+1-|V|))
//   C(v) = sum over provenances supporting v of ln(N*A/(1-A)).
//
// PopAccu replaces the uniform false-value distribution with a popularity
// distribution Pop over the observed values and adds a single "none of the
// observed values" candidate. With uniform candidate prior:
//
//   L(v)    = sum_{obs on v} ln A + sum_{obs (v',S), v' != v} ln((1-A_S) Pop(v'))
//   L(none) = sum_{all obs (v',S)} ln((1-A_S) Pop(v'))
//   P       = softmax over {observed values} + {none}.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kfusion/model.hpp"

namespace kfusion {

class FusionError : public Error {
 public:
  using Error::Error;
};

struct FusionParams {
  int n_false = 100;
  double default_accuracy = 0.8;
  double epsilon = 1e-4;

  // Throws std::invalid_argument unless N >= 1 and eps < A < 1 - eps.
  void validate() const;
  double clamp(double accuracy) const;
};

struct Observation {
  std::string value;
  ProvenanceKey provenance;
};

struct ItemGroup {
  DataItem item;
  std::vector<Observation> observations;

  // Distinct values with provenance counts n(v), sorted by value.
  std::map<std::string, std::uint32_t> value_counts() const;
  std::size_t total() const { return observations.size(); }
};

using ValueProbabilities = std::map<std::string, double>;

enum class Model { kAccu, kPopAccu };

std::map<std::string, double> vote_fuse(const ItemGroup& g);

double accu_vote_count(double accuracy, const FusionParams& p);

std::map<std::string, double> accu_fuse(const ItemGroup& g, const AccuracyTable& acc,
                                        const FusionParams& p);

// Round 1 (no prior): count share. Later rounds: share of the expected
// false support n(v) * (1 - prior(v)); falls back to count share when that
// is zero everywhere. Values missing from the prior count as prior 0.
std::map<std::string, double> popaccu_popularity(
    const ItemGroup& g, const std::optional<std::map<std::string, double>>& prior);

std::map<std::string, double> popaccu_fuse(const ItemGroup& g, const AccuracyTable& acc,
                                           const std::map<std::string, double>& pop,
                                           const FusionParams& p);

// Posterior mass left for candidates outside the observed values.
double accu_unobserved_mass(const ItemGroup& g, const AccuracyTable& acc, const FusionParams& p);
double popaccu_none_mass(const ItemGroup& g, const AccuracyTable& acc,
                         const std::map<std::string, double>& pop, const FusionParams& p);

// Mean of the probabilities, clamped. Throws FusionError on empty input;
// callers keep the previous accuracy in that case.
double provenance_accuracy(std::span<const double> probabilities, const FusionParams& p);

// Direct enumeration of the posterior with raw likelihood products in
// extended precision. Limited to 16 values and 16 provenances. For PopAccu
// the popularity defaults to the count share when not given.
std::map<std::string, double> oracle_fuse(
    const ItemGroup& g, const AccuracyTable& acc, const FusionParams& p, Model model,
    const std::optional<std::map<std::string, double>>& pop = std::nullopt);

// Index-based kernels used by the pipeline. Each evidence entry is one
// (value, provenance) observation; values are dense indices in [0, n).
namespace kernel {

struct Evidence {
  std::uint32_t value;
  double accuracy;
};

// out[v] = count share; values without evidence get 0.
void vote(std::span<const Evidence> ev, std::size_t n_values, std::span<double> out);

void accu(std::span<const Evidence> ev, std::size_t n_values, const FusionParams& p,
          std::span<double> out);

void popularity(std::span<const Evidence> ev, std::size_t n_values,
                std::span<const double> prior, std::span<double> out);

void popaccu(std::span<const Evidence> ev, std::size_t n_values, std::span<const double> pop,
             const FusionParams& p, std::span<double> out);

}  // namespace kernel

}  // namespace kfusion
