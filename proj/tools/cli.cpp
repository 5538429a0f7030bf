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

#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "kfusion/eval.hpp"
#include "kfusion/gold.hpp"
#include "kfusion/ingest.hpp"
#include "kfusion/pipeline.hpp"
#include "kfusion/synth.hpp"
#include "kfusion/tsv.hpp"

namespace kfusion::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError("cannot write " + path.string());
  out << text;
  if (!out) throw IngestError("write failed: " + path.string());
}

nlohmann::json report_json(const IngestReport& r) {
  return {{"lines", r.lines},
          {"malformed", r.malformed},
          {"clamped_confidence", r.clamped_confidence},
          {"duplicates", r.duplicates}};
}

fs::path ensure_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IngestError("cannot create directory " + dir + ": " + ec.message());
  return p;
}

struct GenerateArgs {
  std::string out_dir;
  std::string config;
  std::optional<std::size_t> n_items, n_predicates, n_sources, n_sites, n_extractors;
  std::optional<std::size_t> domain_size, claims_min, claims_max;
  std::optional<double> zipf, kb_fraction;
  std::optional<std::uint64_t> seed;
};

void add_generate(CLI::App& app, GenerateArgs& a) {
  app.add_option("--out-dir", a.out_dir, "Directory for records.tsv, kb.tsv, truth.tsv")->required();
  app.add_option("--config", a.config, "JSON generator config; flags below override it");
  app.add_option("--n-items", a.n_items, "Number of data items");
  app.add_option("--n-predicates", a.n_predicates, "Number of predicates");
  app.add_option("--n-sources", a.n_sources, "Number of Web pages");
  app.add_option("--n-sites", a.n_sites, "Number of Web sites");
  app.add_option("--n-extractors", a.n_extractors, "Number of extractors");
  app.add_option("--domain-size", a.domain_size, "False values per data item");
  app.add_option("--claims-min", a.claims_min, "Minimum claims per page");
  app.add_option("--claims-max", a.claims_max, "Maximum claims per page");
  app.add_option("--zipf", a.zipf, "Zipf exponent of item popularity");
  app.add_option("--kb-fraction", a.kb_fraction, "Share of items present in the KB");
  app.add_option("--seed", a.seed, "Random seed");
}

int do_generate(const GenerateArgs& a, std::ostream& out) {
  SynthConfig cfg;
  if (!a.config.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(tsv::read_file(a.config));
    } catch (const nlohmann::json::exception& e) {
      throw IngestError("bad generator config: " + std::string(e.what()));
    }
    cfg = synth_config_from_json(j);
  }
  if (a.n_items) cfg.n_items = *a.n_items;
  if (a.n_predicates) cfg.n_predicates = *a.n_predicates;
  if (a.n_sources) cfg.n_sources = *a.n_sources;
  if (a.n_sites) cfg.n_sites = *a.n_sites;
  if (a.n_extractors) {
    cfg.n_extractors = *a.n_extractors;
    cfg.extractors.clear();
  }
  if (a.domain_size) cfg.value_domain_size = *a.domain_size;
  if (a.claims_min) cfg.claims_min = *a.claims_min;
  if (a.claims_max) cfg.claims_max = *a.claims_max;
  if (a.zipf) cfg.item_popularity = *a.zipf;
  if (a.kb_fraction) cfg.kb_fraction = *a.kb_fraction;
  if (a.seed) cfg.seed = *a.seed;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  auto dir = ensure_dir(a.out_dir);
  auto data = generate(cfg);
  write_records(data.corpus, (dir / "records.tsv").string());
  write_kb(data.kb, (dir / "kb.tsv").string());
  write_truth_log(data.truth_log, (dir / "truth.tsv").string());
  write_text(dir / "synth_config.json", synth_config_to_json(cfg).dump(2) + "\n");
  out << "generated " << data.corpus.records.size() << " records, " << data.truth_log.size()
      << " unique triples, " << data.kb.size() << " KB triples into " << dir.string() << "\n";
  return kExitOk;
}

struct FuseArgs {
  std::string records, out, diagnostics, gold, preset;
  std::string method = "accu";
  std::string granularity = "extractor-url";
  int n_false = 100;
  double default_accuracy = 0.8;
  int rounds = 5;
  std::size_t sample_limit = 1'000'000;
  bool filter_coverage = false;
  double min_prov_accuracy = 0.0;
  double gold_sample_rate = 1.0;
  double min_confidence = 0.0;
  std::uint64_t seed = 0;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());

  CLI::Option* method_opt = nullptr;
  CLI::Option* granularity_opt = nullptr;
  CLI::Option* filter_coverage_opt = nullptr;
  CLI::Option* min_prov_accuracy_opt = nullptr;
  CLI::Option* min_confidence_opt = nullptr;
};

void add_fuse(CLI::App& app, FuseArgs& a) {
  app.add_option("--records", a.records, "Extraction records TSV (plain or gzip)")->required();
  app.add_option("--out", a.out, "Output probabilities TSV")->required();
  app.add_option("--diagnostics", a.diagnostics, "Diagnostics JSON (default: <out>.diagnostics.json)");
  a.method_opt = app.add_option("--method", a.method, "vote | accu | popaccu")
                     ->check(CLI::IsMember({"vote", "accu", "popaccu"}));
  a.granularity_opt =
      app.add_option("--granularity", a.granularity, "Provenance granularity")
          ->check(CLI::IsMember({"extractor-url", "extractor-site", "extractor-site-pred",
                                 "extractor-site-pred-pattern"}));
  app.add_option("--n-false", a.n_false, "False values per data item (N)");
  app.add_option("--default-accuracy", a.default_accuracy, "Initial provenance accuracy (A)");
  app.add_option("--rounds", a.rounds, "Round budget (R)");
  app.add_option("--sample-limit", a.sample_limit, "Per-group sample size (L)");
  a.filter_coverage_opt = app.add_flag("--filter-coverage", a.filter_coverage,
                                       "Drop provenances whose accuracy was never evaluated");
  a.min_prov_accuracy_opt = app.add_option("--min-prov-accuracy", a.min_prov_accuracy,
                                           "Ignore provenances below this accuracy");
  app.add_option("--gold", a.gold, "Reference KB TSV; enables gold accuracy initialization");
  app.add_option("--gold-sample-rate", a.gold_sample_rate, "Share of gold labels used");
  a.min_confidence_opt = app.add_option("--min-confidence", a.min_confidence,
                                        "Drop records with confidence below this value");
  app.add_option("--seed", a.seed, "Sampling seed");
  app.add_option("--threads", a.threads, "Worker threads");
  app.add_option("--preset", a.preset, "Configuration preset")
      ->check(CLI::IsMember({"popaccu-plus"}));
}

int do_fuse(const FuseArgs& a, std::ostream& out) {
  std::shared_ptr<const GoldStandard> gold;
  if (!a.gold.empty()) {
    auto kb = parse_kb(a.gold);
    gold = std::make_shared<const GoldStandard>(kb.triples);
  }

  PipelineConfig cfg;
  if (a.preset == "popaccu-plus") cfg = popaccu_plus_preset(gold, a.gold_sample_rate);
  if (a.preset.empty() || a.method_opt->count()) cfg.method = *parse_method(a.method);
  if (a.preset.empty() || a.granularity_opt->count()) {
    cfg.granularity = *parse_granularity(a.granularity);
  }
  if (a.filter_coverage_opt->count()) cfg.filter_coverage = a.filter_coverage;
  if (a.min_prov_accuracy_opt->count()) cfg.min_prov_accuracy = a.min_prov_accuracy;
  if (gold) cfg.gold_init = GoldInit{gold, a.gold_sample_rate};
  cfg.params.n_false = a.n_false;
  cfg.params.default_accuracy = a.default_accuracy;
  cfg.rounds = a.rounds;
  cfg.sample_limit = a.sample_limit;
  cfg.seed = a.seed;
  cfg.workers = std::max(1u, a.threads);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (a.min_confidence_opt->count() && !(a.min_confidence >= 0.0 && a.min_confidence <= 1.0)) {
    throw UsageError("--min-confidence must be in [0, 1]");
  }

  Corpus corpus = parse_records(a.records, cfg.workers);
  double retained = 1.0;
  if (a.min_confidence_opt->count()) {
    auto filtered = filter_by_confidence(corpus, a.min_confidence);
    corpus = std::move(filtered.corpus);
    retained = filtered.retained_fraction;
  }
  if (corpus.records.empty()) throw IngestError("no valid records in " + a.records);

  auto run = run_fusion(corpus, cfg);
  write_probabilities(run.result, a.out);

  nlohmann::json diag;
  diag["config"] = config_to_json(cfg);
  diag["config"]["preset"] = a.preset.empty() ? nlohmann::json(nullptr) : nlohmann::json(a.preset);
  diag["config"]["records"] = a.records;
  diag["config"]["gold"] = a.gold.empty() ? nlohmann::json(nullptr) : nlohmann::json(a.gold);
  diag["config"]["min_confidence"] =
      a.min_confidence_opt->count() ? nlohmann::json(a.min_confidence) : nlohmann::json(nullptr);
  diag["ingest"] = report_json(corpus.report);
  diag["ingest"]["records"] = corpus.records.size();
  diag["ingest"]["confidence_retained_fraction"] = retained;
  diag["run"] = diagnostics_to_json(run);
  std::string diag_path = a.diagnostics.empty() ? a.out + ".diagnostics.json" : a.diagnostics;
  write_text(diag_path, diag.dump(2) + "\n");

  out << to_string(cfg.method) << ": " << run.result.rows.size() << " triples, coverage "
      << tsv::format_fixed(run.result.coverage, 4) << ", " << run.rounds.size() << " round(s)"
      << (run.converged ? " (converged)" : "") << ", " << tsv::format_fixed(run.wall_seconds, 2)
      << "s\n";
  return kExitOk;
}

struct EvaluateArgs {
  std::string preds, kb, out_dir = ".";
  int buckets = 20;
};

void add_evaluate(CLI::App& app, EvaluateArgs& a) {
  app.add_option("--preds", a.preds, "Probabilities TSV written by fuse")->required();
  app.add_option("--kb", a.kb, "Reference KB TSV")->required();
  app.add_option("--buckets", a.buckets, "Calibration buckets l (l + 1 buckets in total)")
      ->check(CLI::PositiveNumber);
  app.add_option("--out-dir", a.out_dir, "Directory for calibration.csv, pr.csv, summary.json");
}

int do_evaluate(const EvaluateArgs& a, std::ostream& out) {
  auto preds = parse_probabilities(a.preds);
  auto kb = parse_kb(a.kb);
  GoldStandard gold(kb.triples);
  auto joined = join_predictions(preds.rows, gold);
  auto cal = calibration(joined, a.buckets);
  auto pr = pr_curve(joined);

  std::size_t with_prob = 0;
  for (const auto& r : preds.rows) with_prob += r.probability ? 1 : 0;
  double coverage = preds.rows.empty() ? 0.0 : static_cast<double>(with_prob) / preds.rows.size();

  auto dir = ensure_dir(a.out_dir);
  write_text(dir / "calibration.csv", calibration_csv(cal));
  write_text(dir / "pr.csv", pr_csv(pr));
  nlohmann::json summary{{"deviation", cal.deviation},
                         {"weighted_deviation", cal.weighted_deviation},
                         {"auc_pr", pr.auc_pr},
                         {"coverage", coverage},
                         {"buckets", a.buckets},
                         {"triples", preds.rows.size()},
                         {"labeled_with_probability", joined.size()},
                         {"malformed_lines", preds.report.malformed}};
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  out << "Dev. " << tsv::format_fixed(cal.deviation, 4) << "  WDev. "
      << tsv::format_fixed(cal.weighted_deviation, 4) << "  AUC-PR "
      << tsv::format_fixed(pr.auc_pr, 4) << "  coverage " << tsv::format_fixed(coverage, 4) << "\n";
  return kExitOk;
}

struct AnalyzeArgs {
  std::string records, kb, out_dir = ".";
};

void add_analyze(CLI::App& app, AnalyzeArgs& a) {
  app.add_option("--records", a.records, "Extraction records TSV")->required();
  app.add_option("--kb", a.kb, "Reference KB TSV")->required();
  app.add_option("--out-dir", a.out_dir, "Directory for kappa, strata and coverage CSVs");
}

int do_analyze(const AnalyzeArgs& a, std::ostream& out) {
  auto corpus = parse_records(a.records);
  auto kb = parse_kb(a.kb);
  GoldStandard gold(kb.triples);
  auto labels = label_corpus(gold, corpus);
  auto dir = ensure_dir(a.out_dir);

  auto kappas = extractor_kappa(corpus);
  write_text(dir / "kappa.csv", kappa_csv(kappas));
  for (auto key : {StratumKey::kProvenances, StratumKey::kExtractors, StratumKey::kSources,
                   StratumKey::kConfidence, StratumKey::kPredicate}) {
    auto rows = accuracy_by_stratum(corpus, labels.labels, key);
    write_text(dir / ("strata_" + std::string(to_string(key)) + ".csv"), strata_csv(rows));
  }
  auto grid = accuracy_by_provenances_and_extractors(corpus, labels.labels);
  write_text(dir / "strata_provenances_x_extractors.csv", strata_csv(grid));
  auto cov = confidence_coverage_sweep(corpus, labels.labels);
  write_text(dir / "confidence_coverage.csv", confidence_coverage_csv(cov));

  out << corpus.records.size() << " records, " << labels.unique_triples << " unique triples, "
      << tsv::format_fixed(labels.labeled_fraction() * 100.0, 1) << "% labeled, "
      << tsv::format_fixed(labels.true_fraction() * 100.0, 1) << "% of labeled true, "
      << kappas.size() << " extractor pairs\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Knowledge fusion over extracted triples"};
  app.name("kfusion");
  app.require_subcommand(1);

  GenerateArgs gen;
  FuseArgs fuse;
  EvaluateArgs eval;
  AnalyzeArgs analyze;
  auto* gen_cmd = app.add_subcommand("generate", "Write a synthetic corpus with known truth");
  add_generate(*gen_cmd, gen);
  auto* fuse_cmd = app.add_subcommand("fuse", "Compute triple probabilities");
  add_fuse(*fuse_cmd, fuse);
  auto* eval_cmd = app.add_subcommand("evaluate", "Calibration and PR metrics against a KB");
  add_evaluate(*eval_cmd, eval);
  auto* analyze_cmd = app.add_subcommand("analyze", "Kappa, accuracy strata, confidence coverage");
  add_analyze(*analyze_cmd, analyze);

  std::vector<const char*> argv{"kfusion"};
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen_cmd) return do_generate(gen, out);
    if (*fuse_cmd) return do_fuse(fuse, out);
    if (*eval_cmd) return do_evaluate(eval, out);
    if (*analyze_cmd) return do_analyze(analyze, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace kfusion::cli
