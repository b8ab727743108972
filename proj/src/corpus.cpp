#include "mtkit/corpus.hpp"

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "mtkit/errors.hpp"
#include "mtkit/rng.hpp"
#include "mtkit/utf8.hpp"

namespace mtkit::corpus {

namespace {

bool is_separator(char32_t cp) {
  // ASCII whitespace, Cc controls, Zs spaces, Zl/Zp line separators.
  if (cp == U' ' || (cp >= 0x09 && cp <= 0x0d)) return true;
  if (cp < 0x20 || (cp >= 0x7f && cp <= 0x9f)) return true;
  if (cp == 0xa0 || cp == 0x1680) return true;
  if (cp >= 0x2000 && cp <= 0x200a) return true;
  if (cp == 0x2028 || cp == 0x2029 || cp == 0x202f || cp == 0x205f)
    return true;
  return cp == 0x3000;
}

std::u32string nfc(const std::u32string& cps) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw data_error("ICU NFC instance unavailable");

  icu::UnicodeString text = icu::UnicodeString::fromUTF32(
      reinterpret_cast<const UChar32*>(cps.data()),
      static_cast<std::int32_t>(cps.size()));
  icu::UnicodeString composed = norm->normalize(text, status);
  if (U_FAILURE(status)) throw data_error("Unicode normalization failed");

  std::u32string out;
  out.reserve(static_cast<std::size_t>(composed.countChar32()));
  for (std::int32_t i = 0; i < composed.length();) {
    const UChar32 cp = composed.char32At(i);
    out.push_back(static_cast<char32_t>(cp));
    i += U16_LENGTH(cp);
  }
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  if (in.bad()) throw io_error("read failure on file: " + path);
  return lines;
}

}  // namespace

std::string normalize(std::string_view raw) {
  if (raw.empty()) return {};
  const std::u32string composed = nfc(utf8::decode(raw));

  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char32_t cp : composed) {
    if (is_separator(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    utf8::append(out, cp);
  }
  return out;
}

ParallelCorpus load_parallel(const std::string& source_path,
                             const std::string& target_path,
                             LoadStats* stats) {
  const auto source_lines = read_lines(source_path);
  const auto target_lines = read_lines(target_path);
  if (source_lines.size() != target_lines.size()) {
    throw data_error("line count mismatch: " + source_path + " has " +
                     std::to_string(source_lines.size()) + " lines, " +
                     target_path + " has " +
                     std::to_string(target_lines.size()));
  }
  ParallelCorpus corpus;
  corpus.pairs.reserve(source_lines.size());
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < source_lines.size(); ++i) {
    std::string src = normalize(source_lines[i]);
    std::string tgt = normalize(target_lines[i]);
    if (src.empty() || tgt.empty()) {
      ++dropped;
      continue;
    }
    corpus.pairs.push_back({std::move(src), std::move(tgt), Origin::Original});
  }
  if (stats) stats->dropped_pairs = dropped;
  return corpus;
}

void save_parallel(const ParallelCorpus& corpus,
                   const std::string& source_path,
                   const std::string& target_path) {
  std::ofstream src(source_path, std::ios::binary);
  std::ofstream tgt(target_path, std::ios::binary);
  if (!src) throw io_error("cannot write file: " + source_path);
  if (!tgt) throw io_error("cannot write file: " + target_path);
  for (const auto& pair : corpus.pairs) {
    src << pair.source << '\n';
    tgt << pair.target << '\n';
  }
}

MonolingualCorpus load_monolingual(const std::string& path,
                                   std::string language_tag,
                                   LoadStats* stats) {
  MonolingualCorpus corpus;
  corpus.language_tag = std::move(language_tag);
  std::size_t dropped = 0;
  for (const auto& line : read_lines(path)) {
    std::string sentence = normalize(line);
    if (sentence.empty()) {
      ++dropped;
      continue;
    }
    corpus.sentences.push_back(std::move(sentence));
  }
  if (stats) stats->dropped_pairs = dropped;
  return corpus;
}

SplitResult split(const ParallelCorpus& corpus, double held_out_fraction,
                  std::uint64_t seed) {
  if (!(held_out_fraction > 0.0 && held_out_fraction < 1.0)) {
    throw parameter_error("held-out fraction must be in (0,1), got " +
                          std::to_string(held_out_fraction));
  }
  const std::size_t n = corpus.size();
  if (n < 2) throw parameter_error("corpus must have at least 2 pairs");

  std::size_t test_size = static_cast<std::size_t>(
      std::llround(held_out_fraction * static_cast<double>(n)));
  test_size = std::clamp<std::size_t>(test_size, 1, n - 1);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Xoshiro256 rng(seed);
  deterministic_shuffle(order, rng);

  std::vector<bool> held_out(n, false);
  for (std::size_t i = 0; i < test_size; ++i) held_out[order[i]] = true;

  SplitResult result;
  result.train.source_tag = result.test.source_tag = corpus.source_tag;
  result.train.target_tag = result.test.target_tag = corpus.target_tag;
  for (std::size_t i = 0; i < n; ++i) {
    (held_out[i] ? result.test : result.train).pairs.push_back(
        corpus.pairs[i]);
  }
  return result;
}

ParallelCorpus mix(const ParallelCorpus& original,
                   const ParallelCorpus& synthetic) {
  ParallelCorpus out = original;
  out.pairs.insert(out.pairs.end(), synthetic.pairs.begin(),
                   synthetic.pairs.end());
  return out;
}

ParallelCorpus swap_orientation(const ParallelCorpus& corpus) {
  ParallelCorpus out;
  out.source_tag = corpus.target_tag;
  out.target_tag = corpus.source_tag;
  out.pairs.reserve(corpus.size());
  for (const auto& pair : corpus.pairs) {
    out.pairs.push_back({pair.target, pair.source, pair.origin});
  }
  return out;
}

}  // namespace mtkit::corpus
