#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mtkit/attention.hpp"
#include "mtkit/bleu.hpp"
#include "mtkit/corpus.hpp"
#include "mtkit/errors.hpp"
#include "mtkit/pipeline.hpp"
#include "mtkit/subword.hpp"

namespace {

std::vector<std::string> read_all_lines(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::vector<std::string> read_file_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw mtkit::io_error("cannot open file: " + path);
  return read_all_lines(in);
}

// "16x8,64x8" -> {(16,8),(64,8)}
std::vector<std::pair<int, int>> parse_size_list(const std::string& text,
                                                 const std::string& flag) {
  std::vector<std::pair<int, int>> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const std::size_t x = item.find('x');
    int a = 0, b = 0;
    try {
      std::size_t used_a = 0, used_b = 0;
      if (x == std::string::npos) throw std::invalid_argument(item);
      a = std::stoi(item.substr(0, x), &used_a);
      b = std::stoi(item.substr(x + 1), &used_b);
      if (used_a != x || used_b != item.size() - x - 1) {
        throw std::invalid_argument(item);
      }
    } catch (const std::exception&) {
      throw mtkit::parameter_error(flag + " expects entries like 16x8, got '" +
                                   item + "'");
    }
    if (a < 1 || b < 1) {
      throw mtkit::parameter_error(flag + " entries must be positive");
    }
    out.emplace_back(a, b);
  }
  if (out.empty()) throw mtkit::parameter_error(flag + " must not be empty");
  return out;
}

int cmd_train_tokenizer(const std::vector<std::string>& corpus_files,
                        int vocab_size, const std::string& meta,
                        const std::string& model_out) {
  if (vocab_size < mtkit::subword::Vocabulary::kNumSpecials + 1) {
    throw mtkit::parameter_error("--vocab-size must be at least " +
                                 std::to_string(
                                     mtkit::subword::Vocabulary::kNumSpecials +
                                     1));
  }
  std::vector<std::string> lines;
  for (const auto& path : corpus_files) {
    for (const auto& raw : read_file_lines(path)) {
      std::string normalized = mtkit::corpus::normalize(raw);
      if (!normalized.empty()) lines.push_back(std::move(normalized));
    }
  }
  if (lines.empty()) throw mtkit::data_error("no usable corpus lines");
  const auto model = mtkit::subword::train_bpe(lines, vocab_size, meta);
  mtkit::subword::save_model(model, model_out);
  std::cout << "tokens=" << model.vocab.size()
            << " merges=" << model.merges.size() << '\n';
  return 0;
}

int cmd_encode(const std::string& model_path, bool add_bos_eos) {
  const auto model = mtkit::subword::load_model(model_path);
  for (const auto& raw : read_all_lines(std::cin)) {
    const auto seq = mtkit::subword::encode(
        model, mtkit::corpus::normalize(raw), add_bos_eos);
    for (std::size_t i = 0; i < seq.ids.size(); ++i) {
      if (i) std::cout << ' ';
      std::cout << seq.ids[i];
    }
    std::cout << '\n';
  }
  return 0;
}

int cmd_decode(const std::string& model_path) {
  const auto model = mtkit::subword::load_model(model_path);
  std::size_t line_no = 0;
  for (const auto& line : read_all_lines(std::cin)) {
    ++line_no;
    mtkit::subword::TokenSequence seq;
    std::istringstream in(line);
    std::string field;
    while (in >> field) {
      try {
        std::size_t used = 0;
        const int id = std::stoi(field, &used);
        if (used != field.size()) throw std::invalid_argument(field);
        seq.ids.push_back(id);
      } catch (const std::exception&) {
        throw mtkit::data_error("bad token id '" + field + "' at line " +
                                std::to_string(line_no) + ", position " +
                                std::to_string(seq.ids.size()));
      }
    }
    seq.attention_mask.assign(seq.ids.size(), 1);
    try {
      std::cout << mtkit::subword::decode(model, seq) << '\n';
    } catch (const mtkit::data_error& e) {
      throw mtkit::data_error(std::string(e.what()) + " at line " +
                              std::to_string(line_no));
    }
  }
  return 0;
}

int cmd_bleu(const std::string& candidate_path,
             const std::vector<std::string>& reference_paths,
             const mtkit::bleu::BleuConfig& config) {
  const auto candidate_lines = read_file_lines(candidate_path);
  std::vector<std::vector<std::string>> reference_lines;
  for (const auto& path : reference_paths) {
    reference_lines.push_back(read_file_lines(path));
    if (reference_lines.back().size() != candidate_lines.size()) {
      throw mtkit::data_error(
          "line count mismatch: " + candidate_path + " has " +
          std::to_string(candidate_lines.size()) + " lines, " + path +
          " has " + std::to_string(reference_lines.back().size()));
    }
  }
  std::vector<mtkit::bleu::Tokens> candidates;
  std::vector<std::vector<mtkit::bleu::Tokens>> references;
  for (std::size_t i = 0; i < candidate_lines.size(); ++i) {
    candidates.push_back(
        mtkit::bleu::tokenize(mtkit::corpus::normalize(candidate_lines[i])));
    std::vector<mtkit::bleu::Tokens> refs;
    for (const auto& lines : reference_lines) {
      refs.push_back(mtkit::bleu::tokenize(mtkit::corpus::normalize(lines[i])));
    }
    references.push_back(std::move(refs));
  }
  const auto report = mtkit::bleu::corpus_bleu(candidates, references, config);
  std::cout << mtkit::bleu::display_score(report) << '\n'
            << mtkit::bleu::to_json(report) << '\n';
  return 0;
}

int cmd_attention_bench(const std::string& sizes, const std::string& tiles,
                        int repeats, std::uint64_t seed, bool float32) {
  mtkit::attention::BenchOptions options;
  options.sizes = parse_size_list(sizes, "--sizes");
  options.tile_configs = parse_size_list(tiles, "--tiles");
  if (repeats < 1) throw mtkit::parameter_error("--repeats must be >= 1");
  options.repeats = repeats;
  options.seed = seed;
  options.single_precision = float32;
  std::cout << mtkit::attention::bench_csv(
      mtkit::attention::attention_bench(options));
  return 0;
}

int cmd_pipeline(const mtkit::pipeline::PipelinePaths& paths,
                 const std::string& config_path) {
  const auto config = mtkit::pipeline::load_config(config_path);
  const auto reports = mtkit::pipeline::run_pipeline(paths, config);
  for (const auto& report : reports) {
    std::cout << mtkit::pipeline::format_record(
                     mtkit::pipeline::to_record(report))
              << '\n';
  }
  std::cerr << "pipeline finished: " << reports.size() << " iterations\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale machine translation toolkit"};
  app.require_subcommand(1);

  // train-tokenizer
  auto* train = app.add_subcommand("train-tokenizer",
                                   "Train a BPE subword model");
  std::vector<std::string> corpus_files;
  int vocab_size = 16000;
  std::string meta = mtkit::subword::kDefaultMetaSymbol;
  std::string model_out;
  train->add_option("corpus", corpus_files, "Corpus files, one sentence per line")
      ->required()
      ->expected(-1);
  train->add_option("--vocab-size", vocab_size, "Maximum vocabulary size")
      ->capture_default_str();
  train->add_option("--meta", meta, "Word-boundary marker character");
  train->add_option("--model-out", model_out, "Output model path")->required();

  // encode / decode
  auto* encode = app.add_subcommand(
      "encode", "Encode stdin lines to token ids (normalizes input first)");
  std::string encode_model;
  bool add_bos_eos = false;
  encode->add_option("--model", encode_model, "Model file")->required();
  encode->add_flag("--add-bos-eos", add_bos_eos, "Wrap lines in BOS/EOS");

  auto* decode = app.add_subcommand("decode",
                                    "Decode stdin lines of token ids to text");
  std::string decode_model;
  decode->add_option("--model", decode_model, "Model file")->required();

  // bleu
  auto* bleu = app.add_subcommand("bleu", "Corpus BLEU of candidate vs references");
  std::string candidate_path;
  std::vector<std::string> reference_paths;
  int max_n = 4;
  std::string smoothing = "none";
  double epsilon = 1e-9;
  bleu->add_option("--candidate", candidate_path, "Candidate file")->required();
  bleu->add_option("--reference", reference_paths, "Reference file (repeatable)")
      ->required();
  bleu->add_option("--max-n", max_n, "Maximum n-gram order")
      ->capture_default_str();
  bleu->add_option("--smoothing", smoothing, "none or epsilon")
      ->check(CLI::IsMember({"none", "epsilon"}))
      ->capture_default_str();
  bleu->add_option("--epsilon", epsilon, "Numerator epsilon for smoothing")
      ->capture_default_str();

  // attention-bench
  auto* bench = app.add_subcommand(
      "attention-bench", "Compare the serial and tiled attention kernels");
  std::string sizes = "16x8,64x16,256x32";
  std::string tiles = "16x16,64x64";
  int repeats = 3;
  std::uint64_t bench_seed = 42;
  bool float32 = false;
  bench->add_option("--sizes", sizes, "Comma-separated NxD list")
      ->capture_default_str();
  bench->add_option("--tiles", tiles, "Comma-separated tile_rows x tile_cols list")
      ->capture_default_str();
  bench->add_option("--repeats", repeats, "Timing repeats, minimum is reported")
      ->capture_default_str();
  bench->add_option("--seed", bench_seed, "Input generator seed")
      ->capture_default_str();
  bench->add_flag("--float32", float32, "Run kernels in single precision");

  // pipeline
  auto* pipe = app.add_subcommand(
      "pipeline", "Backtranslation with iterative fine-tuning");
  mtkit::pipeline::PipelinePaths paths;
  std::string config_path;
  pipe->add_option("--source", paths.source, "Original source-language file")
      ->required();
  pipe->add_option("--target", paths.target, "Original target-language file")
      ->required();
  pipe->add_option("--mono-source", paths.mono_source,
                   "Monolingual source-language file")
      ->required();
  pipe->add_option("--mono-target", paths.mono_target,
                   "Monolingual target-language file")
      ->required();
  pipe->add_option("--config", config_path, "key = value config file")
      ->required();
  pipe->add_option("--report-out", paths.report_out,
                   "Write per-iteration report lines here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (train->parsed()) {
      return cmd_train_tokenizer(corpus_files, vocab_size, meta, model_out);
    }
    if (encode->parsed()) return cmd_encode(encode_model, add_bos_eos);
    if (decode->parsed()) return cmd_decode(decode_model);
    if (bleu->parsed()) {
      mtkit::bleu::BleuConfig config;
      config.max_n = max_n;
      if (smoothing == "epsilon") {
        config.smoothing = mtkit::bleu::BleuConfig::Smoothing::AddEpsilon;
        config.epsilon = epsilon;
      }
      return cmd_bleu(candidate_path, reference_paths, config);
    }
    if (bench->parsed()) {
      return cmd_attention_bench(sizes, tiles, repeats, bench_seed, float32);
    }
    if (pipe->parsed()) return cmd_pipeline(paths, config_path);
    return 1;
  } catch (const mtkit::parameter_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const mtkit::data_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
}
