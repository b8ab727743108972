#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace mtkit::bleu {

using Tokens = std::vector<std::string>;

struct BleuConfig {
  enum class Smoothing { None, AddEpsilon };

  int max_n = 4;
  std::vector<double> weights;  // empty -> uniform 1/max_n
  Smoothing smoothing = Smoothing::None;
  double epsilon = 0.0;
};

// Exact integer pair; only the final exp/log step is floating point.
struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const { return static_cast<double>(num) / den; }
  bool operator==(const Fraction&) const = default;
};

struct BleuReport {
  std::vector<Fraction> precisions;   // p_1 .. p_N, pooled over the corpus
  std::int64_t candidate_length = 0;  // c
  std::int64_t reference_length = 0;  // r, sum of closest per-sentence refs
  double brevity_penalty = 1.0;
  double score = 0.0;
};

// Whitespace split of normalized text. BLEU is tokenizer-sensitive; this
// is the declared tokenization for the whole toolkit.
Tokens tokenize(std::string_view normalized_text);

std::map<Tokens, std::int64_t> ngram_counts(const Tokens& tokens, int n);

// Clipped precision: matches are capped by the maximum count of the n-gram
// in any single reference. Empty candidate yields 0/1.
Fraction modified_precision(const Tokens& candidate,
                            const std::vector<Tokens>& references, int n);

// 1 if c > r; exp(1 - r/c) if 0 < c <= r; 0 if c = 0.
double brevity_penalty(std::int64_t c, std::int64_t r);

// Counts are pooled over the whole corpus before dividing. r sums the
// per-sentence closest reference length (ties toward the shorter one).
BleuReport corpus_bleu(const std::vector<Tokens>& candidates,
                       const std::vector<std::vector<Tokens>>& references,
                       const BleuConfig& config = {});

BleuReport sentence_bleu(const Tokens& candidate,
                         const std::vector<Tokens>& references,
                         const BleuConfig& config = {});

// JSON object with score, bp, c, r and exact [num, den] pairs per n.
std::string to_json(const BleuReport& report);
BleuReport from_json(const std::string& text);

// Table-I style rendering: score x 100 with 2 decimals.
std::string display_score(const BleuReport& report);

}  // namespace mtkit::bleu
