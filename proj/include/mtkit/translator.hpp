#pragma once

#include <map>
#include <string>
#include <string_view>

#include "mtkit/corpus.hpp"

namespace mtkit::translator {

struct Direction {
  std::string source_tag;
  std::string target_tag;

  bool operator==(const Direction&) const = default;
};

Direction reversed(const Direction& direction);

// Behavioral contract for pluggable translation models: translate is
// deterministic on immutable state, train is deterministic and incremental.
class TranslationModel {
 public:
  virtual ~TranslationModel() = default;
  virtual void train(const corpus::ParallelCorpus& corpus) = 0;
  virtual std::string translate(std::string_view sentence) const = 0;
  virtual const Direction& direction() const = 0;
};

// Word co-occurrence lexicon: a deterministic desk-scale stand-in for the
// pretrained transformer. Each pair spreads one unit of mass per source
// word, split as 1/|target words| per (source, target) cell; translation
// picks the argmax target per word (ties toward the lexicographically
// smallest), unknown words pass through unchanged.
class LexiconModel final : public TranslationModel {
 public:
  explicit LexiconModel(Direction direction);

  // Throws orientation_error when the corpus carries tags that do not
  // match this model's direction.
  void train(const corpus::ParallelCorpus& corpus) override;
  std::string translate(std::string_view sentence) const override;
  const Direction& direction() const override { return direction_; }

  double cooccurrence(const std::string& source_word,
                      const std::string& target_word) const;
  double total(const std::string& source_word) const;
  std::size_t entry_count() const;

  // Text lines source<TAB>target<TAB>count (6 decimals), lexicographically
  // sorted, preceded by a '#lexicon v1 <src> <tgt>' header line.
  void save(const std::string& path) const;
  static LexiconModel load(const std::string& path);

  // totals_ is derived from cooc_, so equality is direction plus table.
  bool operator==(const LexiconModel& other) const {
    return direction_ == other.direction_ && cooc_ == other.cooc_;
  }

 private:
  Direction direction_;
  std::map<std::string, std::map<std::string, double>> cooc_;
  std::map<std::string, double> totals_;
};

// Builds the reverse-orientation model of a corpus: swaps the direction and
// trains on the orientation-swapped pairs.
LexiconModel train_reverse(const Direction& forward_direction,
                           const corpus::ParallelCorpus& forward_corpus);

}  // namespace mtkit::translator
