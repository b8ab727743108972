#include "mtkit/translator.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "mtkit/errors.hpp"

namespace mtkit::translator {

namespace {

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t j = text.find(' ', i);
    if (j == std::string_view::npos) {
      words.emplace_back(text.substr(i));
      break;
    }
    if (j > i) words.emplace_back(text.substr(i, j - i));
    i = j + 1;
  }
  return words;
}

}  // namespace

Direction reversed(const Direction& direction) {
  return {direction.target_tag, direction.source_tag};
}

LexiconModel::LexiconModel(Direction direction)
    : direction_(std::move(direction)) {}

void LexiconModel::train(const corpus::ParallelCorpus& corpus) {
  if (!corpus.source_tag.empty() && !corpus.target_tag.empty() &&
      (corpus.source_tag != direction_.source_tag ||
       corpus.target_tag != direction_.target_tag)) {
    throw orientation_error("corpus is " + corpus.source_tag + "->" +
                            corpus.target_tag + " but model is " +
                            direction_.source_tag + "->" +
                            direction_.target_tag);
  }
  for (const auto& pair : corpus.pairs) {
    const auto source_words = split_words(pair.source);
    const auto target_words = split_words(pair.target);
    if (source_words.empty() || target_words.empty()) continue;
    const double mass = 1.0 / static_cast<double>(target_words.size());
    for (const auto& s : source_words) {
      auto& row = cooc_[s];
      auto& total = totals_[s];
      for (const auto& t : target_words) {
        row[t] += mass;
        total += mass;
      }
    }
  }
}

std::string LexiconModel::translate(std::string_view sentence) const {
  std::string out;
  for (const auto& word : split_words(sentence)) {
    const std::string* choice = &word;
    const auto it = cooc_.find(word);
    if (it != cooc_.end() && !it->second.empty()) {
      // std::map iterates targets in sorted order, so the first strict
      // maximum is the lexicographically smallest among ties.
      const std::string* best = nullptr;
      double best_count = 0.0;
      for (const auto& [target, count] : it->second) {
        if (best == nullptr || count > best_count) {
          best = &target;
          best_count = count;
        }
      }
      choice = best;
    }
    if (!out.empty()) out.push_back(' ');
    out += *choice;
  }
  return out;
}

double LexiconModel::cooccurrence(const std::string& source_word,
                                  const std::string& target_word) const {
  const auto it = cooc_.find(source_word);
  if (it == cooc_.end()) return 0.0;
  const auto jt = it->second.find(target_word);
  return jt == it->second.end() ? 0.0 : jt->second;
}

double LexiconModel::total(const std::string& source_word) const {
  const auto it = totals_.find(source_word);
  return it == totals_.end() ? 0.0 : it->second;
}

std::size_t LexiconModel::entry_count() const {
  std::size_t n = 0;
  for (const auto& [_, row] : cooc_) n += row.size();
  return n;
}

void LexiconModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write lexicon file: " + path);
  out << "#lexicon v1 " << direction_.source_tag << ' '
      << direction_.target_tag << '\n';
  char buf[64];
  for (const auto& [source, row] : cooc_) {
    for (const auto& [target, count] : row) {
      std::snprintf(buf, sizeof(buf), "%.6f", count);
      out << source << '\t' << target << '\t' << buf << '\n';
    }
  }
  if (!out) throw io_error("write failure on lexicon file: " + path);
}

LexiconModel LexiconModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open lexicon file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw parse_error("empty lexicon file");
  std::istringstream header(line);
  std::string magic, version, source_tag, target_tag;
  header >> magic >> version >> source_tag >> target_tag;
  if (magic != "#lexicon" || version != "v1") {
    throw parse_error("bad lexicon header at line 1");
  }

  LexiconModel model(Direction{source_tag, target_tag});
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::size_t tab1 = line.find('\t');
    const std::size_t tab2 =
        tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) {
      throw parse_error("expected source<TAB>target<TAB>count at line " +
                        std::to_string(line_no));
    }
    const std::string source = line.substr(0, tab1);
    const std::string target = line.substr(tab1 + 1, tab2 - tab1 - 1);
    const std::string count_text = line.substr(tab2 + 1);
    char* end = nullptr;
    const double count = std::strtod(count_text.c_str(), &end);
    if (end == count_text.c_str() || *end != '\0' || count < 0.0) {
      throw parse_error("bad count '" + count_text + "' at line " +
                        std::to_string(line_no));
    }
    model.cooc_[source][target] = count;
    model.totals_[source] += count;
  }
  return model;
}

LexiconModel train_reverse(const Direction& forward_direction,
                           const corpus::ParallelCorpus& forward_corpus) {
  LexiconModel model(reversed(forward_direction));
  model.train(corpus::swap_orientation(forward_corpus));
  return model;
}

}  // namespace mtkit::translator
