#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "mtkit/corpus.hpp"
#include "mtkit/errors.hpp"
#include "mtkit/translator.hpp"

using namespace mtkit;
using corpus::Origin;
using corpus::ParallelCorpus;
using translator::Direction;
using translator::LexiconModel;

namespace {

ParallelCorpus pairs(std::initializer_list<std::pair<const char*, const char*>>
                         entries) {
  ParallelCorpus c;
  for (const auto& [s, t] : entries) {
    c.pairs.push_back({s, t, Origin::Original});
  }
  return c;
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

const Direction kEnTe{"en", "te"};

}  // namespace

TEST_CASE("train spreads fractional mass per target word") {
  LexiconModel model(kEnTe);
  model.train(pairs({{"a b", "x"}}));
  CHECK(model.cooccurrence("a", "x") == 1.0);
  CHECK(model.cooccurrence("b", "x") == 1.0);
  CHECK(model.total("a") == 1.0);

  LexiconModel halves(kEnTe);
  halves.train(pairs({{"a", "x y"}}));
  CHECK(halves.cooccurrence("a", "x") == 0.5);
  CHECK(halves.cooccurrence("a", "y") == 0.5);
  CHECK(halves.total("a") == 1.0);
}

TEST_CASE("training on an empty corpus changes nothing") {
  LexiconModel model(kEnTe);
  model.train(pairs({{"a", "x"}}));
  const LexiconModel before = model;
  model.train(ParallelCorpus{});
  CHECK(model == before);
}

TEST_CASE("training twice doubles every count") {
  const auto corpus = pairs({{"a b", "x y"}, {"b", "z"}});
  LexiconModel once(kEnTe);
  once.train(corpus);
  LexiconModel twice = once;
  twice.train(corpus);
  CHECK(twice.cooccurrence("a", "x") == 2.0 * once.cooccurrence("a", "x"));
  CHECK(twice.cooccurrence("b", "z") == 2.0 * once.cooccurrence("b", "z"));
  CHECK(twice.total("b") == 2.0 * once.total("b"));
}

TEST_CASE("translate picks the argmax target") {
  LexiconModel model(kEnTe);
  model.train(pairs({{"a", "x"}, {"a", "x"}, {"a", "x"}, {"a", "y"}}));
  CHECK(model.translate("a") == "x");
  CHECK(model.translate("a a") == "x x");
}

TEST_CASE("translate breaks count ties lexicographically") {
  LexiconModel model(kEnTe);
  model.train(pairs({{"a", "y"}, {"a", "y"}, {"a", "x"}, {"a", "x"}}));
  CHECK(model.cooccurrence("a", "x") == model.cooccurrence("a", "y"));
  CHECK(model.translate("a") == "x");
}

TEST_CASE("unknown words pass through unchanged") {
  LexiconModel model(kEnTe);
  model.train(pairs({{"a", "x"}}));
  CHECK(model.translate("unknown words here") == "unknown words here");
  CHECK(model.translate("a unknown a") == "x unknown x");
  CHECK(model.translate("") == "");
}

TEST_CASE("word order is preserved") {
  LexiconModel model(kEnTe);
  model.train(pairs({{"a", "x"}, {"b", "y"}}));
  CHECK(model.translate("a b a") == "x y x");
  CHECK(model.translate("b a") == "y x");
}

TEST_CASE("orientation check uses corpus tags when present") {
  LexiconModel model(kEnTe);
  ParallelCorpus wrong = pairs({{"a", "x"}});
  wrong.source_tag = "te";
  wrong.target_tag = "en";
  CHECK_THROWS_AS(model.train(wrong), orientation_error);

  ParallelCorpus untagged = pairs({{"a", "x"}});
  CHECK_NOTHROW(model.train(untagged));  // empty tags skip the check
}

TEST_CASE("reversed direction and reverse training") {
  CHECK(translator::reversed(kEnTe) == Direction{"te", "en"});
  CHECK(translator::reversed(translator::reversed(kEnTe)) == kEnTe);

  const auto corpus = pairs({{"a", "x"}, {"b", "y"}});
  const auto reverse = translator::train_reverse(kEnTe, corpus);
  CHECK(reverse.direction() == Direction{"te", "en"});
  CHECK(reverse.translate("x y") == "a b");

  // reverse model from corpus C equals a forward model on swapped C
  LexiconModel direct(Direction{"te", "en"});
  direct.train(corpus::swap_orientation(corpus));
  CHECK(direct == reverse);
}

TEST_CASE("monotone knowledge: training never removes entries") {
  LexiconModel model(kEnTe);
  model.train(pairs({{"a", "x"}}));
  model.train(pairs({{"a", "y"}, {"b", "z"}}));
  CHECK(model.cooccurrence("a", "x") == 1.0);
  CHECK(model.cooccurrence("a", "y") == 1.0);
  CHECK(model.cooccurrence("b", "z") == 1.0);
}

TEST_CASE("scaling all counts leaves translations unchanged") {
  const auto corpus = pairs({{"a b", "x y"}, {"a", "y"}, {"c b", "z w"}});
  LexiconModel model(kEnTe);
  model.train(corpus);
  LexiconModel scaled(kEnTe);
  for (int i = 0; i < 3; ++i) scaled.train(corpus);
  for (const std::string sentence : {"a", "b", "c a b", "a b c"}) {
    CHECK(model.translate(sentence) == scaled.translate(sentence));
  }
}

TEST_CASE("serialization round trip and byte stability") {
  const auto dir = std::filesystem::temp_directory_path();
  LexiconModel model(kEnTe);
  model.train(pairs({{"b a", "y x"}, {"a", "z z z"}}));

  const auto path = (dir / "mtkit_lexicon.txt").string();
  model.save(path);
  const auto loaded = LexiconModel::load(path);
  CHECK(loaded.direction() == model.direction());

  // counts compare at the declared 6-decimal precision
  CHECK(loaded.cooccurrence("a", "y") ==
        doctest::Approx(model.cooccurrence("a", "y")).epsilon(1e-6));
  CHECK(loaded.cooccurrence("a", "z") ==
        doctest::Approx(model.cooccurrence("a", "z")).epsilon(1e-6));

  // re-serialization is byte-stable
  const auto path2 = (dir / "mtkit_lexicon2.txt").string();
  loaded.save(path2);
  CHECK(file_bytes(path) == file_bytes(path2));

  // half-unit counts are exact at 6 decimals
  LexiconModel exact(kEnTe);
  exact.train(pairs({{"a", "x y"}}));
  const auto path3 = (dir / "mtkit_lexicon3.txt").string();
  exact.save(path3);
  CHECK(LexiconModel::load(path3) == exact);
}

TEST_CASE("determinism: identical training gives identical bytes") {
  const auto corpus = pairs({{"a b c", "x y"}, {"c", "w"}});
  const auto dir = std::filesystem::temp_directory_path();
  LexiconModel m1(kEnTe);
  m1.train(corpus);
  LexiconModel m2(kEnTe);
  m2.train(corpus);
  const auto p1 = (dir / "mtkit_det1.txt").string();
  const auto p2 = (dir / "mtkit_det2.txt").string();
  m1.save(p1);
  m2.save(p2);
  CHECK(file_bytes(p1) == file_bytes(p2));
}

TEST_CASE("load rejects malformed lexicon files") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto bad = (dir / "mtkit_badlex.txt").string();
  {
    std::ofstream out(bad);
    out << "#lexicon v1 en te\n" << "a\tx\tnot-a-number\n";
  }
  CHECK_THROWS_AS(LexiconModel::load(bad), parse_error);

  const auto no_header = (dir / "mtkit_nohdr.txt").string();
  {
    std::ofstream out(no_header);
    out << "a\tx\t1.000000\n";
  }
  CHECK_THROWS_AS(LexiconModel::load(no_header), parse_error);
}
