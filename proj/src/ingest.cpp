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

#include "kfusion/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <thread>
#include <tuple>
#include <unordered_set>

#include "kfusion/parallel.hpp"
#include "kfusion/tsv.hpp"

namespace kfusion {

namespace {

constexpr std::size_t kRecordColumns = 7;

auto record_key(const ExtractionRecord& r) {
  return std::tie(r.triple, r.extractor, r.url, r.pattern);
}

bool valid_record(const ExtractionRecord& r) {
  return !r.triple.subject.empty() && !r.triple.predicate.empty() && !r.extractor.empty() &&
         !r.url.empty();
}

struct ChunkResult {
  std::vector<ExtractionRecord> records;
  IngestReport report;
};

void parse_record_line(std::string_view line, ChunkResult& out) {
  ++out.report.lines;
  if (line.empty()) {
    ++out.report.malformed;
    return;
  }
  auto fields = tsv::split_line(line);
  if (fields.size() != kRecordColumns) {
    ++out.report.malformed;
    return;
  }
  ExtractionRecord r;
  r.triple = {std::move(fields[0]), std::move(fields[1]), std::move(fields[2])};
  r.extractor = std::move(fields[3]);
  r.url = std::move(fields[4]);
  r.pattern = std::move(fields[5]);
  if (!fields[6].empty()) {
    auto conf = tsv::parse_double(fields[6]);
    if (!conf) {
      ++out.report.malformed;
      return;
    }
    if (*conf < 0.0 || *conf > 1.0) {
      ++out.report.clamped_confidence;
      *conf = std::clamp(*conf, 0.0, 1.0);
    }
    r.confidence = *conf;
  }
  if (!valid_record(r)) {
    ++out.report.malformed;
    return;
  }
  out.records.push_back(std::move(r));
}

// Splits text into at most n pieces, each ending on a line boundary.
std::vector<std::string_view> split_chunks(std::string_view text, std::size_t n) {
  std::vector<std::string_view> chunks;
  std::size_t target = std::max<std::size_t>(1, text.size() / std::max<std::size_t>(1, n));
  while (!text.empty()) {
    std::size_t cut = std::min(text.size(), target);
    if (cut < text.size()) {
      auto nl = text.find('\n', cut - 1);
      cut = nl == std::string_view::npos ? text.size() : nl + 1;
    }
    chunks.push_back(text.substr(0, cut));
    text.remove_prefix(cut);
  }
  return chunks;
}

}  // namespace

Corpus make_corpus(std::vector<ExtractionRecord> records) {
  Corpus c;
  auto invalid = std::remove_if(records.begin(), records.end(),
                                [](const ExtractionRecord& r) { return !valid_record(r); });
  c.report.malformed = static_cast<std::size_t>(records.end() - invalid);
  records.erase(invalid, records.end());
  for (auto& r : records) {
    if (r.confidence) r.confidence = std::clamp(*r.confidence, 0.0, 1.0);
  }

  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return record_key(a) < record_key(b);
  });
  std::vector<ExtractionRecord> out;
  out.reserve(records.size());
  for (auto& r : records) {
    if (!out.empty() && record_key(out.back()) == record_key(r)) {
      ++c.report.duplicates;
      auto& kept = out.back().confidence;
      if (r.confidence && (!kept || *r.confidence > *kept)) kept = r.confidence;
      continue;
    }
    out.push_back(std::move(r));
  }
  c.records = std::move(out);
  return c;
}

Corpus parse_records_text(std::string_view text, unsigned workers) {
  auto chunks = split_chunks(text, std::max(1u, workers));
  std::vector<ChunkResult> parts(chunks.size());
  parallel_for_blocks(
      chunks.size(), workers,
      [&](unsigned, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
          tsv::for_each_line(chunks[i], [&](std::string_view line) {
            parse_record_line(line, parts[i]);
          });
        }
      },
      1);

  std::vector<ExtractionRecord> all;
  IngestReport report;
  std::size_t total = 0;
  for (const auto& p : parts) total += p.records.size();
  all.reserve(total);
  for (auto& p : parts) {
    report.lines += p.report.lines;
    report.malformed += p.report.malformed;
    report.clamped_confidence += p.report.clamped_confidence;
    std::move(p.records.begin(), p.records.end(), std::back_inserter(all));
  }
  Corpus c = make_corpus(std::move(all));
  c.report.lines = report.lines;
  c.report.malformed += report.malformed;
  c.report.clamped_confidence = report.clamped_confidence;
  return c;
}

Corpus parse_records(const std::string& path, unsigned workers) {
  return parse_records_text(tsv::read_file(path), workers);
}

std::string format_record(const ExtractionRecord& r) {
  return tsv::join_line({r.triple.subject, r.triple.predicate, r.triple.object, r.extractor,
                         r.url, r.pattern,
                         r.confidence ? tsv::format_double(*r.confidence) : std::string()});
}

void write_records(const Corpus& c, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError("cannot write " + path);
  for (const auto& r : c.records) out << format_record(r) << '\n';
  if (!out) throw IngestError("write failed: " + path);
}

ConfidenceFilterResult filter_by_confidence(const Corpus& c, double threshold) {
  ConfidenceFilterResult res;
  res.corpus.report = c.report;
  for (const auto& r : c.records) {
    if (!r.confidence || *r.confidence >= threshold) res.corpus.records.push_back(r);
  }
  res.retained_fraction =
      c.records.empty() ? 1.0
                        : static_cast<double>(res.corpus.records.size()) / c.records.size();
  return res;
}

CorpusStats corpus_stats(const Corpus& c) {
  CorpusStats s;
  s.records = c.records.size();
  std::unordered_set<Triple, TripleHash> triples;
  std::unordered_set<DataItem, DataItemHash> items;
  std::unordered_set<std::string> extractors, urls;
  std::set<ProvenanceKey> provs[4];
  for (const auto& r : c.records) {
    triples.insert(r.triple);
    items.insert(data_item(r.triple));
    extractors.insert(r.extractor);
    urls.insert(r.url);
    for (int g = 0; g < 4; ++g) provs[g].insert(provenance_key(r, static_cast<Granularity>(g)));
  }
  s.unique_triples = triples.size();
  s.data_items = items.size();
  s.extractors = extractors.size();
  s.urls = urls.size();
  for (int g = 0; g < 4; ++g) s.provenances[g] = provs[g].size();
  return s;
}

KnowledgeBase parse_kb_text(std::string_view text) {
  KnowledgeBase kb;
  tsv::for_each_line(text, [&](std::string_view line) {
    ++kb.report.lines;
    auto fields = tsv::split_line(line);
    if (line.empty() || fields.size() != 3 || fields[0].empty() || fields[1].empty()) {
      ++kb.report.malformed;
      return;
    }
    kb.triples.push_back({std::move(fields[0]), std::move(fields[1]), std::move(fields[2])});
  });
  std::sort(kb.triples.begin(), kb.triples.end());
  auto last = std::unique(kb.triples.begin(), kb.triples.end());
  kb.report.duplicates = static_cast<std::size_t>(kb.triples.end() - last);
  kb.triples.erase(last, kb.triples.end());
  return kb;
}

KnowledgeBase parse_kb(const std::string& path) { return parse_kb_text(tsv::read_file(path)); }

void write_kb(const std::vector<Triple>& triples, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError("cannot write " + path);
  for (const auto& t : triples) out << tsv::join_line({t.subject, t.predicate, t.object}) << '\n';
  if (!out) throw IngestError("write failed: " + path);
}

}  // namespace kfusion
