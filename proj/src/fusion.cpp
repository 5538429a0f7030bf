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

#include "kfusion/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace kfusion {

void FusionParams::validate() const {
  if (n_false < 1) throw std::invalid_argument("n_false must be >= 1");
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw std::invalid_argument("epsilon must be in (0, 0.5)");
  if (!(default_accuracy > epsilon && default_accuracy < 1.0 - epsilon)) {
    throw std::invalid_argument("default_accuracy must lie strictly inside (eps, 1 - eps)");
  }
}

double FusionParams::clamp(double accuracy) const {
  return std::clamp(accuracy, epsilon, 1.0 - epsilon);
}

std::map<std::string, std::uint32_t> ItemGroup::value_counts() const {
  std::map<std::string, std::uint32_t> counts;
  for (const auto& o : observations) ++counts[o.value];
  return counts;
}

double accu_vote_count(double accuracy, const FusionParams& p) {
  double a = p.clamp(accuracy);
  return std::log(p.n_false * a / (1.0 - a));
}

namespace kernel {

void vote(std::span<const Evidence> ev, std::size_t n_values, std::span<double> out) {
  std::fill(out.begin(), out.begin() + n_values, 0.0);
  if (ev.empty()) return;
  for (const auto& e : ev) out[e.value] += 1.0;
  const double n = static_cast<double>(ev.size());
  for (std::size_t v = 0; v < n_values; ++v) out[v] /= n;
}

void accu(std::span<const Evidence> ev, std::size_t n_values, const FusionParams& p,
          std::span<double> out) {
  std::fill(out.begin(), out.begin() + n_values, 0.0);
  for (const auto& e : ev) out[e.value] += accu_vote_count(e.accuracy, p);
  // Unobserved candidates have vote count 0, so the shift is at least 0.
  double shift = 0.0;
  for (std::size_t v = 0; v < n_values; ++v) shift = std::max(shift, out[v]);
  const double unobserved =
      std::max(0.0, static_cast<double>(p.n_false) + 1.0 - static_cast<double>(n_values));
  double denom = unobserved * std::exp(-shift);
  for (std::size_t v = 0; v < n_values; ++v) {
    out[v] = std::exp(out[v] - shift);
    denom += out[v];
  }
  for (std::size_t v = 0; v < n_values; ++v) out[v] /= denom;
}

void popularity(std::span<const Evidence> ev, std::size_t n_values,
                std::span<const double> prior, std::span<double> out) {
  std::fill(out.begin(), out.begin() + n_values, 0.0);
  for (const auto& e : ev) out[e.value] += 1.0;
  double n_total = static_cast<double>(ev.size());
  if (n_total == 0.0) return;
  if (!prior.empty()) {
    double sum = 0.0;
    std::vector<double> expected_false(n_values);
    for (std::size_t v = 0; v < n_values; ++v) {
      expected_false[v] = out[v] * (1.0 - std::clamp(prior[v], 0.0, 1.0));
      sum += expected_false[v];
    }
    if (sum > 0.0) {
      for (std::size_t v = 0; v < n_values; ++v) out[v] = expected_false[v] / sum;
      return;
    }
  }
  for (std::size_t v = 0; v < n_values; ++v) out[v] /= n_total;
}

void popaccu(std::span<const Evidence> ev, std::size_t n_values, std::span<const double> pop,
             const FusionParams& p, std::span<double> out) {
  // L(v) - L(none): the shared sum over all observations cancels.
  std::fill(out.begin(), out.begin() + n_values, 0.0);
  for (const auto& e : ev) {
    double a = p.clamp(e.accuracy);
    double pv = std::max(pop[e.value], p.epsilon);
    out[e.value] += std::log(a) - std::log((1.0 - a) * pv);
  }
  double shift = 0.0;
  for (std::size_t v = 0; v < n_values; ++v) shift = std::max(shift, out[v]);
  double denom = std::exp(-shift);
  for (std::size_t v = 0; v < n_values; ++v) {
    out[v] = std::exp(out[v] - shift);
    denom += out[v];
  }
  for (std::size_t v = 0; v < n_values; ++v) out[v] /= denom;
}

}  // namespace kernel

namespace {

struct Indexed {
  std::vector<std::string> values;
  std::vector<kernel::Evidence> evidence;
};

Indexed index_group(const ItemGroup& g, const AccuracyTable* acc) {
  if (g.observations.empty()) throw FusionError("empty item group");
  Indexed ix;
  std::set<std::pair<std::string, ProvenanceKey>> seen;
  for (const auto& o : g.observations) {
    if (!seen.emplace(o.value, o.provenance).second) {
      throw FusionError("duplicate observation for provenance " + o.provenance.display());
    }
    ix.values.push_back(o.value);
  }
  std::sort(ix.values.begin(), ix.values.end());
  ix.values.erase(std::unique(ix.values.begin(), ix.values.end()), ix.values.end());
  // Evidence in (value, provenance) order so sums do not depend on input order.
  for (const auto& [value, provenance] : seen) {
    auto v = static_cast<std::uint32_t>(
        std::lower_bound(ix.values.begin(), ix.values.end(), value) - ix.values.begin());
    double a = 0.0;
    if (acc) {
      auto it = acc->find(provenance);
      if (it == acc->end()) throw FusionError("no accuracy for " + provenance.display());
      a = it->second.accuracy;
    }
    ix.evidence.push_back({v, a});
  }
  return ix;
}

std::map<std::string, double> to_map(const Indexed& ix, const std::vector<double>& probs) {
  std::map<std::string, double> out;
  for (std::size_t v = 0; v < ix.values.size(); ++v) out.emplace(ix.values[v], probs[v]);
  return out;
}

std::vector<double> pop_vector(const Indexed& ix, const std::map<std::string, double>& pop) {
  std::vector<double> out(ix.values.size(), 0.0);
  for (std::size_t v = 0; v < ix.values.size(); ++v) {
    auto it = pop.find(ix.values[v]);
    if (it != pop.end()) out[v] = it->second;
  }
  return out;
}

}  // namespace

std::map<std::string, double> vote_fuse(const ItemGroup& g) {
  auto ix = index_group(g, nullptr);
  std::vector<double> probs(ix.values.size());
  kernel::vote(ix.evidence, ix.values.size(), probs);
  return to_map(ix, probs);
}

std::map<std::string, double> accu_fuse(const ItemGroup& g, const AccuracyTable& acc,
                                        const FusionParams& p) {
  auto ix = index_group(g, &acc);
  std::vector<double> probs(ix.values.size());
  kernel::accu(ix.evidence, ix.values.size(), p, probs);
  return to_map(ix, probs);
}

double accu_unobserved_mass(const ItemGroup& g, const AccuracyTable& acc, const FusionParams& p) {
  double sum = 0.0;
  for (const auto& [v, prob] : accu_fuse(g, acc, p)) sum += prob;
  return std::max(0.0, 1.0 - sum);
}

std::map<std::string, double> popaccu_popularity(
    const ItemGroup& g, const std::optional<std::map<std::string, double>>& prior) {
  auto ix = index_group(g, nullptr);
  std::vector<double> prior_vec;
  if (prior) prior_vec = pop_vector(ix, *prior);
  std::vector<double> pop(ix.values.size());
  kernel::popularity(ix.evidence, ix.values.size(), prior_vec, pop);
  return to_map(ix, pop);
}

std::map<std::string, double> popaccu_fuse(const ItemGroup& g, const AccuracyTable& acc,
                                           const std::map<std::string, double>& pop,
                                           const FusionParams& p) {
  auto ix = index_group(g, &acc);
  auto pop_vec = pop_vector(ix, pop);
  std::vector<double> probs(ix.values.size());
  kernel::popaccu(ix.evidence, ix.values.size(), pop_vec, p, probs);
  return to_map(ix, probs);
}

double popaccu_none_mass(const ItemGroup& g, const AccuracyTable& acc,
                         const std::map<std::string, double>& pop, const FusionParams& p) {
  double sum = 0.0;
  for (const auto& [v, prob] : popaccu_fuse(g, acc, pop, p)) sum += prob;
  return std::max(0.0, 1.0 - sum);
}

double provenance_accuracy(std::span<const double> probabilities, const FusionParams& p) {
  if (probabilities.empty()) throw FusionError("no probabilities for provenance");
  double sum = std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
  return p.clamp(sum / static_cast<double>(probabilities.size()));
}

std::map<std::string, double> oracle_fuse(const ItemGroup& g, const AccuracyTable& acc,
                                          const FusionParams& p, Model model,
                                          const std::optional<std::map<std::string, double>>& pop) {
  constexpr std::size_t kMaxValues = 16;
  constexpr std::size_t kMaxProvenances = 16;
  if (g.observations.empty()) throw FusionError("empty item group");

  std::set<std::string> values;
  std::set<ProvenanceKey> provs;
  for (const auto& o : g.observations) {
    values.insert(o.value);
    provs.insert(o.provenance);
  }
  if (values.size() > kMaxValues || provs.size() > kMaxProvenances) {
    throw FusionError("oracle limited to 16 values and 16 provenances");
  }

  std::map<std::string, long double> popularity;
  if (model == Model::kPopAccu) {
    auto counts = g.value_counts();
    for (const auto& v : values) {
      long double share = static_cast<long double>(counts[v]) / g.observations.size();
      if (pop) {
        auto it = pop->find(v);
        share = it == pop->end() ? 0.0L : it->second;
      }
      popularity[v] = std::max<long double>(share, p.epsilon);
    }
  }

  auto accuracy_of = [&](const ProvenanceKey& k) -> long double {
    auto it = acc.find(k);
    if (it == acc.end()) throw FusionError("no accuracy for " + k.display());
    return p.clamp(it->second.accuracy);
  };

  // Probability of one observation given that `truth` is the true value;
  // truth == nullptr stands for a candidate outside the observed values.
  auto likelihood = [&](const std::string* truth) {
    long double l = 1.0L;
    for (const auto& o : g.observations) {
      long double a = accuracy_of(o.provenance);
      if (truth && o.value == *truth) {
        l *= a;
      } else if (model == Model::kAccu) {
        l *= (1.0L - a) / p.n_false;
      } else {
        l *= (1.0L - a) * popularity.at(o.value);
      }
    }
    return l;
  };

  std::map<std::string, long double> joint;
  long double total = 0.0L;
  for (const auto& v : values) {
    joint[v] = likelihood(&v);
    total += joint[v];
  }
  long double outside = likelihood(nullptr);
  if (model == Model::kAccu) {
    long double k = static_cast<long double>(p.n_false) + 1.0L - values.size();
    total += std::max<long double>(0.0L, k) * outside;
  } else {
    total += outside;
  }

  std::map<std::string, double> out;
  for (const auto& [v, l] : joint) out.emplace(v, static_cast<double>(l / total));
  return out;
}

}  // namespace kfusion
