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
// Reading and writing extraction-record and knowledge-base files.
//
// Records file: 7 tab-separated columns
//   subject, predicate, object, extractor, url, pattern, confidence
// where pattern and confidence may be empty. KB file: 3 columns
//   subject, predicate, object.
// Either may be gzip-compressed.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "kfusion/model.hpp"

namespace kfusion {

struct IngestReport {
  std::size_t lines = 0;
  std::size_t malformed = 0;
  std::size_t clamped_confidence = 0;
  std::size_t duplicates = 0;
};

// Records sorted by (triple, extractor, url, pattern) with no two equal on
// that key.
struct Corpus {
  std::vector<ExtractionRecord> records;
  IngestReport report;
};

struct CorpusStats {
  std::size_t records = 0;
  std::size_t unique_triples = 0;
  std::size_t data_items = 0;
  std::size_t extractors = 0;
  std::size_t urls = 0;
  // Indexed by Granularity.
  std::size_t provenances[4] = {0, 0, 0, 0};
};

CorpusStats corpus_stats(const Corpus& c);

// Validates, sorts and collapses duplicates, keeping the maximum confidence.
// Invalid records (empty subject, predicate, extractor or url) are dropped
// and counted as malformed.
Corpus make_corpus(std::vector<ExtractionRecord> records);

Corpus parse_records_text(std::string_view text, unsigned workers = 1);
Corpus parse_records(const std::string& path, unsigned workers = 1);

std::string format_record(const ExtractionRecord& r);
void write_records(const Corpus& c, const std::string& path);

struct ConfidenceFilterResult {
  Corpus corpus;
  double retained_fraction = 1.0;
};

// Keeps records with confidence >= threshold; records without a confidence
// always pass.
ConfidenceFilterResult filter_by_confidence(const Corpus& c, double threshold);

// Sorted, duplicate-free set of reference triples.
struct KnowledgeBase {
  std::vector<Triple> triples;
  IngestReport report;
};

KnowledgeBase parse_kb_text(std::string_view text);
KnowledgeBase parse_kb(const std::string& path);
void write_kb(const std::vector<Triple>& triples, const std::string& path);

}  // namespace kfusion
