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
// Gold standard under the local closed-world assumption: a triple in the
// reference KB is true; a triple whose (subject, predicate) the KB knows
// but whose object it does not is false; anything else is unlabeled.

#include <cstddef>
#include <span>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

#include "kfusion/ingest.hpp"
#include "kfusion/model.hpp"

namespace kfusion {

enum class Label { kTrue, kFalse, kUnknown };

std::string_view to_string(Label l);

class GoldStandard {
 public:
  GoldStandard() = default;
  explicit GoldStandard(std::span<const Triple> kb);

  Label label(const Triple& t) const;

  std::size_t kb_size() const { return kb_triples_.size(); }
  std::size_t item_count() const { return kb_items_.size(); }

 private:
  std::unordered_set<Triple, TripleHash> kb_triples_;
  std::unordered_set<DataItem, DataItemHash> kb_items_;
};

Label lcwa_label(const GoldStandard& gs, const Triple& t);

using LabelMap = std::unordered_map<Triple, Label, TripleHash>;

struct LabelReport {
  LabelMap labels;
  std::size_t unique_triples = 0;
  std::size_t labeled = 0;
  std::size_t labeled_true = 0;

  double labeled_fraction() const {
    return unique_triples ? static_cast<double>(labeled) / unique_triples : 0.0;
  }
  double true_fraction() const {
    return labeled ? static_cast<double>(labeled_true) / labeled : 0.0;
  }
};

LabelReport label_corpus(const GoldStandard& gs, const Corpus& c);

}  // namespace kfusion
