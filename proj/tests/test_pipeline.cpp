#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "mtkit/corpus.hpp"
#include "mtkit/errors.hpp"
#include "mtkit/pipeline.hpp"
#include "mtkit/translator.hpp"

using namespace mtkit;
using corpus::MonolingualCorpus;
using corpus::Origin;
using corpus::ParallelCorpus;
using pipeline::PipelineConfig;
using pipeline::PipelinePaths;
using pipeline::PipelineState;
using translator::Direction;
using translator::LexiconModel;

namespace {

const std::filesystem::path kFixtures{MTKIT_FIXTURE_DIR};

ParallelCorpus pairs(std::initializer_list<std::pair<const char*, const char*>>
                         entries) {
  ParallelCorpus c;
  for (const auto& [s, t] : entries) {
    c.pairs.push_back({s, t, Origin::Original});
  }
  return c;
}

MonolingualCorpus mono(std::initializer_list<const char*> sentences,
                       std::string tag = "te") {
  MonolingualCorpus m;
  m.language_tag = std::move(tag);
  for (const char* s : sentences) m.sentences.push_back(s);
  return m;
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

PipelinePaths fixture_paths(const std::string& report_out) {
  PipelinePaths paths;
  paths.source = (kFixtures / "pipeline" / "train.en").string();
  paths.target = (kFixtures / "pipeline" / "train.xx").string();
  paths.mono_source = (kFixtures / "pipeline" / "mono.en").string();
  paths.mono_target = (kFixtures / "pipeline" / "mono.xx").string();
  paths.report_out = report_out;
  return paths;
}

}  // namespace

TEST_CASE("generate_synthetic pairs translations with originals") {
  LexiconModel reverse(Direction{"te", "en"});
  reverse.train(pairs({{"a", "x"}, {"b", "y"}}));

  const auto synthetic =
      pipeline::generate_synthetic(reverse, mono({"a", "b a"}));
  REQUIRE(synthetic.size() == 2);
  CHECK(synthetic.pairs[0].source == "x");
  CHECK(synthetic.pairs[0].target == "a");
  CHECK(synthetic.pairs[0].origin == Origin::Synthetic);
  CHECK(synthetic.pairs[1].source == "y x");
  CHECK(synthetic.pairs[1].target == "b a");

  CHECK(pipeline::generate_synthetic(reverse, mono({})).size() == 0);

  std::size_t dropped = 7;
  const auto all = pipeline::generate_synthetic(
      reverse, mono({"a", "unknown words", "b"}), &dropped);
  CHECK(all.size() == 3);
  CHECK(dropped == 0);
}

TEST_CASE("generate_synthetic checks orientation") {
  LexiconModel reverse(Direction{"te", "en"});
  CHECK_THROWS_AS(
      pipeline::generate_synthetic(reverse, mono({"a"}, "en")),
      orientation_error);
  CHECK_NOTHROW(pipeline::generate_synthetic(reverse, mono({"a"}, "")));
}

TEST_CASE("run_iteration grows the training set and trains models") {
  PipelineConfig config;
  config.bidirectional = true;
  config.bleu.smoothing = bleu::BleuConfig::Smoothing::AddEpsilon;
  config.bleu.epsilon = 1e-9;

  const Direction fwd_dir{"en", "te"};
  ParallelCorpus train = pairs({{"a b", "x y"}, {"c", "z"}, {"b", "y"}});
  train.source_tag = "en";
  train.target_tag = "te";
  ParallelCorpus held = pairs({{"a c", "x z"}});
  held.source_tag = "en";
  held.target_tag = "te";

  PipelineState state{LexiconModel(fwd_dir),
                      LexiconModel(translator::reversed(fwd_dir)), train,
                      held};
  state.forward.train(state.train);
  state.reverse.train(corpus::swap_orientation(state.train));

  const auto mono_src = mono({"a a", "b"}, "en");
  const auto mono_tgt = mono({"y z", "x", "z z"}, "te");

  const auto report = pipeline::run_iteration(state, mono_src, mono_tgt,
                                              config, 1);
  CHECK(report.iteration_index == 1);
  CHECK(report.synthetic_added == 5);  // 3 from mono_tgt + 2 from mono_src
  CHECK(report.train_size == 3 + 5);
  CHECK(state.train.size() == 8);
  CHECK(report.bleu_reverse.has_value());

  // original pairs stay first and untouched
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(state.train.pairs[i] == train.pairs[i]);
  }
  for (std::size_t i = 3; i < 8; ++i) {
    CHECK(state.train.pairs[i].origin == Origin::Synthetic);
  }
}

TEST_CASE("synthetic_cap zero freezes the training set") {
  PipelineConfig config;
  config.synthetic_cap = 0;
  config.bleu.smoothing = bleu::BleuConfig::Smoothing::AddEpsilon;
  config.bleu.epsilon = 1e-9;

  const Direction fwd_dir{"en", "te"};
  ParallelCorpus train = pairs({{"a b", "x y"}, {"c", "z"}});
  ParallelCorpus held = pairs({{"a", "x"}});

  PipelineState state{LexiconModel(fwd_dir),
                      LexiconModel(translator::reversed(fwd_dir)), train,
                      held};
  state.forward.train(state.train);
  state.reverse.train(corpus::swap_orientation(state.train));

  const auto mono_tgt = mono({"x y", "z"}, "te");
  const auto r1 = pipeline::run_iteration(state, mono({}, "en"), mono_tgt,
                                          config, 1);
  const auto r2 = pipeline::run_iteration(state, mono({}, "en"), mono_tgt,
                                          config, 2);
  CHECK(r1.synthetic_added == 0);
  CHECK(r2.synthetic_added == 0);
  CHECK(r1.train_size == 2);
  CHECK(r2.train_size == 2);
  CHECK(r1.bleu_forward.score == r2.bleu_forward.score);
}

TEST_CASE("synthetic_cap subsamples deterministically") {
  PipelineConfig config;
  config.synthetic_cap = 2;
  config.seed = 11;
  config.bleu.smoothing = bleu::BleuConfig::Smoothing::AddEpsilon;
  config.bleu.epsilon = 1e-9;

  const Direction fwd_dir{"en", "te"};
  const auto make_state = [&] {
    PipelineState state{LexiconModel(fwd_dir),
                        LexiconModel(translator::reversed(fwd_dir)),
                        pairs({{"a", "x"}, {"b", "y"}}), pairs({{"c", "w"}})};
    state.forward.train(state.train);
    state.reverse.train(corpus::swap_orientation(state.train));
    return state;
  };
  const auto mono_tgt = mono({"p", "q", "r", "s", "t"}, "te");

  auto s1 = make_state();
  const auto r1 = pipeline::run_iteration(s1, mono({}, "en"), mono_tgt,
                                          config, 1);
  CHECK(r1.synthetic_added == 2);
  CHECK(s1.train.size() == 4);

  auto s2 = make_state();
  const auto r2 = pipeline::run_iteration(s2, mono({}, "en"), mono_tgt,
                                          config, 1);
  CHECK(s1.train == s2.train);
}

TEST_CASE("held-out targets never enter training as synthetic targets") {
  PipelineConfig config;
  config.bleu.smoothing = bleu::BleuConfig::Smoothing::AddEpsilon;
  config.bleu.epsilon = 1e-9;

  const Direction fwd_dir{"en", "te"};
  PipelineState state{LexiconModel(fwd_dir),
                      LexiconModel(translator::reversed(fwd_dir)),
                      pairs({{"a", "x"}, {"b", "y"}}),
                      pairs({{"held src", "held tgt"}})};
  state.forward.train(state.train);
  state.reverse.train(corpus::swap_orientation(state.train));

  // one mono sentence collides with the held-out target verbatim
  const auto mono_tgt = mono({"held tgt", "fresh one"}, "te");
  const auto report = pipeline::run_iteration(state, mono({}, "en"), mono_tgt,
                                              config, 1);
  CHECK(report.synthetic_added == 1);
  for (const auto& pair : state.train.pairs) {
    CHECK(pair.target != "held tgt");
  }
}

TEST_CASE("run_pipeline on the committed fixture") {
  const auto report_path =
      (std::filesystem::temp_directory_path() / "mtkit_report.txt").string();
  const auto config = pipeline::load_config(
      (kFixtures / "pipeline" / "config.txt").string());
  CHECK(config.iterations == 2);
  CHECK(config.bidirectional);

  const auto reports = pipeline::run_pipeline(fixture_paths(report_path),
                                              config);
  REQUIRE(reports.size() == 2);
  // 25 fixture pairs split 20/5; each iteration adds 10+10 synthetic pairs
  CHECK(reports[0].synthetic_added == 20);
  CHECK(reports[0].train_size == 40);
  CHECK(reports[1].synthetic_added == 20);
  CHECK(reports[1].train_size == 60);
  CHECK(reports[0].bleu_reverse.has_value());

  // the report file carries one line per iteration
  const auto records = pipeline::load_records(report_path);
  REQUIRE(records.size() == 2);
  CHECK(records[0] == pipeline::to_record(reports[0]));
  CHECK(records[1] == pipeline::to_record(reports[1]));
}

TEST_CASE("run_pipeline is byte-deterministic") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto config = pipeline::load_config(
      (kFixtures / "pipeline" / "config.txt").string());
  const auto p1 = (dir / "mtkit_report_a.txt").string();
  const auto p2 = (dir / "mtkit_report_b.txt").string();
  pipeline::run_pipeline(fixture_paths(p1), config);
  pipeline::run_pipeline(fixture_paths(p2), config);
  const auto bytes = file_bytes(p1);
  CHECK(!bytes.empty());
  CHECK(bytes == file_bytes(p2));
}

TEST_CASE("unidirectional runs use only the target-side monolingual data") {
  auto config = pipeline::load_config(
      (kFixtures / "pipeline" / "config.txt").string());
  config.bidirectional = false;
  const auto reports = pipeline::run_pipeline(fixture_paths(""), config);
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].synthetic_added == 10);  // only the 10 mono.xx sentences
  CHECK(reports[0].train_size == 30);
  CHECK(reports[1].train_size == 40);
  CHECK_FALSE(reports[0].bleu_reverse.has_value());
}

TEST_CASE("default iteration count is five") {
  CHECK(PipelineConfig{}.iterations == 5);
  const auto config = pipeline::load_config(
      (kFixtures / "pipeline" / "config5.txt").string());
  CHECK(config.iterations == 5);
  const auto reports = pipeline::run_pipeline(fixture_paths(""), config);
  CHECK(reports.size() == 5);
  for (std::size_t i = 1; i < reports.size(); ++i) {
    CHECK(reports[i].train_size >= reports[i - 1].train_size);
    CHECK(reports[i].train_size ==
          reports[i - 1].train_size + reports[i].synthetic_added);
  }
}

TEST_CASE("config parsing rejects unknown keys by name") {
  try {
    pipeline::parse_config("iterations = 2\nnot_a_key = 5\n");
    FAIL("expected parameter_error");
  } catch (const parameter_error& e) {
    CHECK(std::string(e.what()).find("not_a_key") != std::string::npos);
  }
  CHECK_THROWS_AS(pipeline::parse_config("iterations = zero"),
                  parameter_error);
  CHECK_THROWS_AS(pipeline::parse_config("iterations = 0"), parameter_error);
  CHECK_THROWS_AS(pipeline::parse_config("synthetic_cap = -1"),
                  parameter_error);
  CHECK_THROWS_AS(pipeline::parse_config("bleu_max_n = 0"), parameter_error);
  CHECK_THROWS_AS(
      pipeline::parse_config("bleu_smoothing = epsilon\nbleu_epsilon = 0"),
      parameter_error);

  const auto config = pipeline::parse_config(
      "# comment\n\nbidirectional = true\nseed = 9\n");
  CHECK(config.bidirectional);
  CHECK(config.seed == 9);
  CHECK(config.iterations == 5);
  CHECK_FALSE(config.synthetic_cap.has_value());
}

TEST_CASE("report records round trip through the line format") {
  pipeline::ReportRecord record;
  record.iteration_index = 3;
  record.synthetic_added = 14;
  record.train_size = 62;
  record.bleu_forward = "12.34";
  record.bleu_reverse = "9.87";
  const auto line = pipeline::format_record(record);
  CHECK(pipeline::parse_record(line) == record);

  pipeline::ReportRecord unidirectional = record;
  unidirectional.bleu_reverse.reset();
  CHECK(pipeline::parse_record(pipeline::format_record(unidirectional)) ==
        unidirectional);

  CHECK_THROWS_AS(pipeline::parse_record("iteration=1"), parse_error);
  CHECK_THROWS_AS(pipeline::parse_record("bogus"), parse_error);

  const auto dir = std::filesystem::temp_directory_path();
  const auto path = (dir / "mtkit_records.txt").string();
  pipeline::save_records({record, unidirectional}, path);
  const auto loaded = pipeline::load_records(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0] == record);
  CHECK(loaded[1] == unidirectional);
}
