#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mtkit/bleu.hpp"
#include "mtkit/corpus.hpp"
#include "mtkit/translator.hpp"

namespace mtkit::pipeline {

struct PipelineConfig {
  int iterations = 5;
  bool bidirectional = false;
  std::optional<std::int64_t> synthetic_cap;  // per iteration; absent = unlimited
  std::uint64_t seed = 0;
  double held_out_fraction = 0.1;
  bleu::BleuConfig bleu;
};

struct IterationReport {
  int iteration_index = 0;  // 1-based
  std::int64_t synthetic_added = 0;
  std::int64_t train_size = 0;
  bleu::BleuReport bleu_forward;
  std::optional<bleu::BleuReport> bleu_reverse;
};

// What one report-file line carries: the IterationReport fields with BLEU
// rendered as score x 100, 2 decimals.
struct ReportRecord {
  int iteration_index = 0;
  std::int64_t synthetic_added = 0;
  std::int64_t train_size = 0;
  std::string bleu_forward;
  std::optional<std::string> bleu_reverse;

  bool operator==(const ReportRecord&) const = default;
};

ReportRecord to_record(const IterationReport& report);
std::string format_record(const ReportRecord& record);
ReportRecord parse_record(const std::string& line);

void save_records(const std::vector<ReportRecord>& records,
                  const std::string& path);
std::vector<ReportRecord> load_records(const std::string& path);

// 'key = value' lines; '#' starts a comment. Unknown keys are errors.
PipelineConfig load_config(const std::string& path);
PipelineConfig parse_config(const std::string& text);

struct PipelineState {
  translator::LexiconModel forward;
  translator::LexiconModel reverse;
  corpus::ParallelCorpus train;
  corpus::ParallelCorpus held_out;
};

// One pair (translate(reverse_model, t), t) per monolingual target
// sentence, origin Synthetic. Pairs whose translation normalizes to empty
// are dropped and counted. Output order equals input order even though
// sentences are translated in parallel.
corpus::ParallelCorpus generate_synthetic(
    const translator::TranslationModel& reverse_model,
    const corpus::MonolingualCorpus& mono_target,
    std::size_t* dropped = nullptr);

// One backtranslation cycle: synthesize, guard against held-out leakage,
// cap, mix, train both models on the new pairs, evaluate BLEU.
IterationReport run_iteration(PipelineState& state,
                              const corpus::MonolingualCorpus& mono_source,
                              const corpus::MonolingualCorpus& mono_target,
                              const PipelineConfig& config,
                              int iteration_index);

struct PipelinePaths {
  std::string source;
  std::string target;
  std::string mono_source;
  std::string mono_target;
  std::string report_out;  // empty = no report file
};

std::vector<IterationReport> run_pipeline(const PipelinePaths& paths,
                                          const PipelineConfig& config);

}  // namespace mtkit::pipeline
