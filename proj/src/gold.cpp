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

#include "kfusion/gold.hpp"

namespace kfusion {

std::string_view to_string(Label l) {
  switch (l) {
    case Label::kTrue:
      return "true";
    case Label::kFalse:
      return "false";
    case Label::kUnknown:
      return "unknown";
  }
  return "unknown";
}

GoldStandard::GoldStandard(std::span<const Triple> kb) {
  kb_triples_.reserve(kb.size());
  for (const auto& t : kb) {
    kb_triples_.insert(t);
    kb_items_.insert(data_item(t));
  }
}

Label GoldStandard::label(const Triple& t) const {
  if (kb_triples_.contains(t)) return Label::kTrue;
  if (kb_items_.contains(data_item(t))) return Label::kFalse;
  return Label::kUnknown;
}

Label lcwa_label(const GoldStandard& gs, const Triple& t) { return gs.label(t); }

LabelReport label_corpus(const GoldStandard& gs, const Corpus& c) {
  LabelReport report;
  for (const auto& r : c.records) {
    auto [it, inserted] = report.labels.try_emplace(r.triple, Label::kUnknown);
    if (!inserted) continue;
    it->second = gs.label(r.triple);
    ++report.unique_triples;
    if (it->second != Label::kUnknown) ++report.labeled;
    if (it->second == Label::kTrue) ++report.labeled_true;
  }
  return report;
}

}  // namespace kfusion
