#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mtkit::subword {

// Default word-boundary marker, U+2581.
inline constexpr const char* kDefaultMetaSymbol = "\xe2\x96\x81";

struct MergeRule {
  std::string left;
  std::string right;

  std::string merged() const { return left + right; }
  bool operator==(const MergeRule&) const = default;
};

struct Vocabulary {
  static constexpr int kUnkId = 0;
  static constexpr int kBosId = 1;
  static constexpr int kEosId = 2;
  static constexpr int kPadId = 3;
  static constexpr int kNumSpecials = 4;

  std::vector<std::string> id_to_token;
  std::unordered_map<std::string, int> token_to_id;

  static Vocabulary with_specials();
  // Adds the token if absent; returns its id either way.
  int add(const std::string& token);
  // -1 when absent.
  int id_of(const std::string& token) const;
  int size() const { return static_cast<int>(id_to_token.size()); }
  static bool is_special(int id) { return id >= 0 && id < kNumSpecials; }
};

struct SubwordModel {
  Vocabulary vocab;
  std::vector<MergeRule> merges;           // rank = index
  std::vector<double> unigram_logprob;     // per id; NaN for specials
  std::string meta_symbol = kDefaultMetaSymbol;
};

struct TokenSequence {
  std::vector<int> ids;
  std::vector<int> attention_mask;  // 1 for real tokens, 0 for padding
};

using SymbolSeq = std::vector<std::string>;
using PairCounts = std::map<std::pair<std::string, std::string>, std::int64_t>;

// Adjacent-pair counts weighted by word frequency. Every adjacent position
// counts, so ("a","a","a") contributes two counts of (a,a).
PairCounts pair_counts(
    const std::vector<std::pair<SymbolSeq, std::int64_t>>& word_frequencies);

// Greedy BPE: repeatedly merge the most frequent adjacent pair (ties broken
// toward the lexicographically smallest (left, right)) until the vocabulary
// reaches vocab_size or the best frequency drops below 2. Words start as
// code-point symbols with a standalone meta symbol prepended. Unigram log
// probabilities are the final tokens' relative frequencies in the fully
// merged corpus (-inf for vocabulary tokens that no longer occur).
SubwordModel train_bpe(const std::vector<std::string>& corpus, int vocab_size,
                       const std::string& meta_symbol = kDefaultMetaSymbol);

// Splits on spaces, prepends the meta symbol per word, applies merges in
// rank order. Symbols absent from the vocabulary map to UNK.
TokenSequence encode(const SubwordModel& model, std::string_view text,
                     bool add_bos_eos = false);

// Concatenates token strings, drops specials, turns the meta symbol back
// into spaces and trims the leading one. Throws data_error naming the
// position of an out-of-range id.
std::string decode(const SubwordModel& model, const TokenSequence& tokens);

struct ScoreStats {
  int special_tokens = 0;  // tokens that contributed 0 (no probability)
};

// Sum of unigram log probabilities over non-special tokens; 0 for empty.
double unigram_logprob_of(const SubwordModel& model,
                          const TokenSequence& tokens,
                          ScoreStats* stats = nullptr);

void save_model(const SubwordModel& model, const std::string& path);
SubwordModel load_model(const std::string& path);

// NaN-aware field-by-field comparison for round-trip checks.
bool structurally_equal(const SubwordModel& a, const SubwordModel& b);

}  // namespace mtkit::subword
