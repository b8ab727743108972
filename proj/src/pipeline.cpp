#include "mtkit/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "mtkit/errors.hpp"
#include "mtkit/rng.hpp"

namespace mtkit::pipeline {

namespace {

using corpus::MonolingualCorpus;
using corpus::Origin;
using corpus::ParallelCorpus;

std::string trimmed(const std::string& text) {
  std::size_t begin = text.find_first_not_of(" \t");
  if (begin == std::string::npos) return {};
  std::size_t end = text.find_last_not_of(" \t");
  return text.substr(begin, end - begin + 1);
}

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw parameter_error("config key '" + key + "' expects true/false, got '" +
                        value + "'");
}

std::int64_t parse_int(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    const std::int64_t v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw parameter_error("config key '" + key + "' expects an integer, got '" +
                          value + "'");
  }
}

double parse_real(const std::string& value, const std::string& key) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0') {
    throw parameter_error("config key '" + key + "' expects a number, got '" +
                          value + "'");
  }
  return v;
}

// Keeps `keep` elements chosen uniformly without replacement, preserving
// input order. The subsample stream is derived from (seed, iteration) so
// each iteration draws independently but reproducibly.
std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t keep,
                                           std::uint64_t seed,
                                           int iteration_index) {
  std::vector<std::size_t> indices(n);
  std::iota(indices.begin(), indices.end(), 0);
  if (keep >= n) return indices;
  std::uint64_t stream = seed;
  stream = splitmix64_next(stream) ^ static_cast<std::uint64_t>(iteration_index);
  Xoshiro256 rng(stream);
  deterministic_shuffle(indices, rng);
  indices.resize(keep);
  std::sort(indices.begin(), indices.end());
  return indices;
}

bleu::BleuReport evaluate(const translator::TranslationModel& model,
                          const ParallelCorpus& held_out,
                          const bleu::BleuConfig& config) {
  std::vector<bleu::Tokens> candidates;
  std::vector<std::vector<bleu::Tokens>> references;
  candidates.reserve(held_out.size());
  references.reserve(held_out.size());
  for (const auto& pair : held_out.pairs) {
    candidates.push_back(bleu::tokenize(model.translate(pair.source)));
    references.push_back({bleu::tokenize(pair.target)});
  }
  return bleu::corpus_bleu(candidates, references, config);
}

}  // namespace

ReportRecord to_record(const IterationReport& report) {
  ReportRecord record;
  record.iteration_index = report.iteration_index;
  record.synthetic_added = report.synthetic_added;
  record.train_size = report.train_size;
  record.bleu_forward = bleu::display_score(report.bleu_forward);
  if (report.bleu_reverse) {
    record.bleu_reverse = bleu::display_score(*report.bleu_reverse);
  }
  return record;
}

std::string format_record(const ReportRecord& record) {
  std::ostringstream out;
  out << "iteration=" << record.iteration_index
      << "\tsynthetic_added=" << record.synthetic_added
      << "\ttrain_size=" << record.train_size
      << "\tbleu_forward=" << record.bleu_forward;
  if (record.bleu_reverse) out << "\tbleu_reverse=" << *record.bleu_reverse;
  return out.str();
}

ReportRecord parse_record(const std::string& line) {
  ReportRecord record;
  bool saw_iteration = false, saw_added = false, saw_size = false,
       saw_forward = false;
  std::istringstream in(line);
  std::string field;
  while (std::getline(in, field, '\t')) {
    const std::size_t eq = field.find('=');
    if (eq == std::string::npos) {
      throw parse_error("bad report field '" + field + "'");
    }
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    if (key == "iteration") {
      record.iteration_index = static_cast<int>(parse_int(value, key));
      saw_iteration = true;
    } else if (key == "synthetic_added") {
      record.synthetic_added = parse_int(value, key);
      saw_added = true;
    } else if (key == "train_size") {
      record.train_size = parse_int(value, key);
      saw_size = true;
    } else if (key == "bleu_forward") {
      record.bleu_forward = value;
      saw_forward = true;
    } else if (key == "bleu_reverse") {
      record.bleu_reverse = value;
    } else {
      throw parse_error("unknown report field '" + key + "'");
    }
  }
  if (!saw_iteration || !saw_added || !saw_size || !saw_forward) {
    throw parse_error("incomplete report line: " + line);
  }
  return record;
}

void save_records(const std::vector<ReportRecord>& records,
                  const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write report file: " + path);
  for (const auto& record : records) out << format_record(record) << '\n';
  if (!out) throw io_error("write failure on report file: " + path);
}

std::vector<ReportRecord> load_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open report file: " + path);
  std::vector<ReportRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) records.push_back(parse_record(line));
  }
  return records;
}

PipelineConfig parse_config(const std::string& text) {
  PipelineConfig config;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  int smoothing_set = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trimmed(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw parameter_error("expected 'key = value' at config line " +
                            std::to_string(line_no));
    }
    const std::string key = trimmed(stripped.substr(0, eq));
    const std::string value = trimmed(stripped.substr(eq + 1));
    if (key == "iterations") {
      config.iterations = static_cast<int>(parse_int(value, key));
    } else if (key == "bidirectional") {
      config.bidirectional = parse_bool(value, key);
    } else if (key == "synthetic_cap") {
      config.synthetic_cap = parse_int(value, key);
    } else if (key == "seed") {
      config.seed = static_cast<std::uint64_t>(parse_int(value, key));
    } else if (key == "held_out_fraction") {
      config.held_out_fraction = parse_real(value, key);
    } else if (key == "bleu_max_n") {
      config.bleu.max_n = static_cast<int>(parse_int(value, key));
    } else if (key == "bleu_smoothing") {
      if (value == "none") {
        config.bleu.smoothing = bleu::BleuConfig::Smoothing::None;
      } else if (value == "epsilon") {
        config.bleu.smoothing = bleu::BleuConfig::Smoothing::AddEpsilon;
        if (!smoothing_set) config.bleu.epsilon = 1e-9;
      } else {
        throw parameter_error("config key 'bleu_smoothing' expects none or "
                              "epsilon, got '" + value + "'");
      }
    } else if (key == "bleu_epsilon") {
      config.bleu.epsilon = parse_real(value, key);
      smoothing_set = 1;
    } else {
      throw parameter_error("unknown config key '" + key + "'");
    }
  }
  if (config.iterations < 1) {
    throw parameter_error("iterations must be >= 1");
  }
  if (config.synthetic_cap && *config.synthetic_cap < 0) {
    throw parameter_error("synthetic_cap must be >= 0");
  }
  if (config.bleu.max_n < 1) {
    throw parameter_error("bleu_max_n must be >= 1");
  }
  if (config.bleu.smoothing == bleu::BleuConfig::Smoothing::AddEpsilon &&
      !(config.bleu.epsilon > 0.0)) {
    throw parameter_error("bleu_epsilon must be > 0 with epsilon smoothing");
  }
  return config;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open config file: " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

corpus::ParallelCorpus generate_synthetic(
    const translator::TranslationModel& reverse_model,
    const corpus::MonolingualCorpus& mono_target, std::size_t* dropped) {
  if (!mono_target.language_tag.empty() &&
      !reverse_model.direction().source_tag.empty() &&
      mono_target.language_tag != reverse_model.direction().source_tag) {
    throw orientation_error(
        "monolingual corpus is " + mono_target.language_tag +
        " but reverse model translates from " +
        reverse_model.direction().source_tag);
  }

  const std::int64_t count = static_cast<std::int64_t>(mono_target.size());
  std::vector<std::string> translations(mono_target.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) {
    translations[i] = reverse_model.translate(mono_target.sentences[i]);
  }

  ParallelCorpus synthetic;
  synthetic.source_tag = reverse_model.direction().target_tag;
  synthetic.target_tag = reverse_model.direction().source_tag;
  std::size_t drop_count = 0;
  for (std::size_t i = 0; i < mono_target.size(); ++i) {
    std::string source = corpus::normalize(translations[i]);
    if (source.empty()) {
      ++drop_count;
      continue;
    }
    synthetic.pairs.push_back(
        {std::move(source), mono_target.sentences[i], Origin::Synthetic});
  }
  if (dropped) *dropped = drop_count;
  return synthetic;
}

IterationReport run_iteration(PipelineState& state,
                              const MonolingualCorpus& mono_source,
                              const MonolingualCorpus& mono_target,
                              const PipelineConfig& config,
                              int iteration_index) {
  // (1) target-side monolingual text backtranslated into the source frame
  ParallelCorpus batch = generate_synthetic(state.reverse, mono_target);

  // (2) source-side monolingual text forward-translated, then swapped into
  // the same training frame
  if (config.bidirectional) {
    const ParallelCorpus swapped_frame =
        generate_synthetic(state.forward, mono_source);
    const ParallelCorpus forward_frame = corpus::swap_orientation(swapped_frame);
    batch.pairs.insert(batch.pairs.end(), forward_frame.pairs.begin(),
                       forward_frame.pairs.end());
  }

  // Leakage guard: a synthetic pair must not share a target sentence with
  // the held-out set.
  std::set<std::string_view> held_out_targets;
  for (const auto& pair : state.held_out.pairs) {
    held_out_targets.insert(pair.target);
  }
  ParallelCorpus guarded;
  guarded.source_tag = state.train.source_tag;
  guarded.target_tag = state.train.target_tag;
  for (auto& pair : batch.pairs) {
    if (!held_out_targets.contains(pair.target)) {
      guarded.pairs.push_back(std::move(pair));
    }
  }

  // (3) per-iteration cap via seeded uniform subsample
  ParallelCorpus capped;
  capped.source_tag = guarded.source_tag;
  capped.target_tag = guarded.target_tag;
  if (config.synthetic_cap &&
      static_cast<std::int64_t>(guarded.size()) > *config.synthetic_cap) {
    for (const std::size_t i : subsample_indices(
             guarded.size(), static_cast<std::size_t>(*config.synthetic_cap),
             config.seed, iteration_index)) {
      capped.pairs.push_back(std::move(guarded.pairs[i]));
    }
  } else {
    capped = std::move(guarded);
  }

  // (4) mix and (5) train both models incrementally on the new pairs only
  const std::int64_t added = static_cast<std::int64_t>(capped.size());
  state.forward.train(capped);
  state.reverse.train(corpus::swap_orientation(capped));
  state.train = corpus::mix(state.train, capped);

  // (6) held-out evaluation
  IterationReport report;
  report.iteration_index = iteration_index;
  report.synthetic_added = added;
  report.train_size = static_cast<std::int64_t>(state.train.size());
  report.bleu_forward = evaluate(state.forward, state.held_out, config.bleu);
  if (config.bidirectional) {
    report.bleu_reverse = evaluate(
        state.reverse, corpus::swap_orientation(state.held_out), config.bleu);
  }
  return report;
}

std::vector<IterationReport> run_pipeline(const PipelinePaths& paths,
                                          const PipelineConfig& config) {
  corpus::ParallelCorpus full =
      corpus::load_parallel(paths.source, paths.target);
  const MonolingualCorpus mono_source =
      corpus::load_monolingual(paths.mono_source, full.source_tag);
  const MonolingualCorpus mono_target =
      corpus::load_monolingual(paths.mono_target, full.target_tag);

  corpus::SplitResult split =
      corpus::split(full, config.held_out_fraction, config.seed);

  const translator::Direction forward_direction{full.source_tag,
                                                full.target_tag};
  PipelineState state{
      translator::LexiconModel(forward_direction),
      translator::LexiconModel(translator::reversed(forward_direction)),
      std::move(split.train), std::move(split.test)};

  // The models exist before the first synthetic generation: both are
  // trained on the original training half up front.
  state.forward.train(state.train);
  state.reverse.train(corpus::swap_orientation(state.train));

  std::ofstream report_file;
  if (!paths.report_out.empty()) {
    report_file.open(paths.report_out, std::ios::binary);
    if (!report_file) {
      throw io_error("cannot write report file: " + paths.report_out);
    }
  }

  std::vector<IterationReport> reports;
  reports.reserve(config.iterations);
  for (int i = 1; i <= config.iterations; ++i) {
    try {
      reports.push_back(
          run_iteration(state, mono_source, mono_target, config, i));
    } catch (const std::exception& e) {
      throw data_error("iteration " + std::to_string(i) +
                       " failed: " + e.what());
    }
    if (report_file.is_open()) {
      report_file << format_record(to_record(reports.back())) << '\n';
      report_file.flush();
    }
  }
  return reports;
}

}  // namespace mtkit::pipeline
