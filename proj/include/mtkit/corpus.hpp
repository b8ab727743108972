#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mtkit::corpus {

enum class Origin { Original, Synthetic };

struct SentencePair {
  std::string source;
  std::string target;
  Origin origin = Origin::Original;

  bool operator==(const SentencePair&) const = default;
};

// Iteration order is insertion order; that order is semantic (splits and
// report files depend on it). Language tags are optional metadata; empty
// tags skip orientation checks.
struct ParallelCorpus {
  std::vector<SentencePair> pairs;
  std::string source_tag;
  std::string target_tag;

  std::size_t size() const { return pairs.size(); }
  bool operator==(const ParallelCorpus&) const = default;
};

struct MonolingualCorpus {
  std::vector<std::string> sentences;
  std::string language_tag;

  std::size_t size() const { return sentences.size(); }
};

// NFC normalization, whitespace runs collapsed to single spaces, ends
// trimmed. Control characters (category Cc) act as separators, as do the
// Unicode space and line separators. Throws data_error naming the byte
// offset on invalid UTF-8.
std::string normalize(std::string_view raw);

struct LoadStats {
  std::size_t dropped_pairs = 0;
};

// Pairs line i of source with line i of target after normalization. Pairs
// where either side is empty after normalization are dropped and counted.
ParallelCorpus load_parallel(const std::string& source_path,
                             const std::string& target_path,
                             LoadStats* stats = nullptr);

void save_parallel(const ParallelCorpus& corpus,
                   const std::string& source_path,
                   const std::string& target_path);

MonolingualCorpus load_monolingual(const std::string& path,
                                   std::string language_tag,
                                   LoadStats* stats = nullptr);

struct SplitResult {
  ParallelCorpus train;
  ParallelCorpus test;
};

// Seeded shuffle of indices (xoshiro256**), the shuffled prefix becomes the
// held-out set. |test| = round(fraction * |corpus|), clamped to [1, n-1].
// Both halves keep the original corpus order.
SplitResult split(const ParallelCorpus& corpus, double held_out_fraction,
                  std::uint64_t seed);

// Every pair of both inputs exactly once, original pairs first.
ParallelCorpus mix(const ParallelCorpus& original,
                   const ParallelCorpus& synthetic);

// Swaps source/target of every pair and the language tags. Origin kept.
ParallelCorpus swap_orientation(const ParallelCorpus& corpus);

}  // namespace mtkit::corpus
