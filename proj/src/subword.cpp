#include "mtkit/subword.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "mtkit/errors.hpp"
#include "mtkit/utf8.hpp"

namespace mtkit::subword {

namespace {

constexpr const char* kSpecialTokens[] = {"<unk>", "<s>", "</s>", "<pad>"};

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

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& text, int line_no) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    throw parse_error("bad float '" + text + "' at line " +
                      std::to_string(line_no));
  }
  return v;
}

// Interned symbol strings; pair keys pack two 32-bit ids.
struct SymbolTable {
  std::vector<std::string> strings;
  std::unordered_map<std::string, int> ids;

  int intern(const std::string& s) {
    const auto it = ids.find(s);
    if (it != ids.end()) return it->second;
    const int id = static_cast<int>(strings.size());
    strings.push_back(s);
    ids.emplace(s, id);
    return id;
  }
};

std::uint64_t pack(int a, int b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

struct TrainerWord {
  std::vector<int> syms;
  std::int64_t freq = 0;
};

}  // namespace

Vocabulary Vocabulary::with_specials() {
  Vocabulary v;
  for (const char* token : kSpecialTokens) v.add(token);
  return v;
}

int Vocabulary::add(const std::string& token) {
  const auto it = token_to_id.find(token);
  if (it != token_to_id.end()) return it->second;
  const int id = size();
  id_to_token.push_back(token);
  token_to_id.emplace(token, id);
  return id;
}

int Vocabulary::id_of(const std::string& token) const {
  const auto it = token_to_id.find(token);
  return it == token_to_id.end() ? -1 : it->second;
}

PairCounts pair_counts(
    const std::vector<std::pair<SymbolSeq, std::int64_t>>& word_frequencies) {
  PairCounts counts;
  for (const auto& [syms, freq] : word_frequencies) {
    if (syms.empty()) {
      throw parameter_error("every word must map to a nonempty symbol sequence");
    }
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      counts[{syms[i], syms[i + 1]}] += freq;
    }
  }
  return counts;
}

SubwordModel train_bpe(const std::vector<std::string>& corpus, int vocab_size,
                       const std::string& meta_symbol) {
  if (corpus.empty()) throw parameter_error("training corpus is empty");
  if (utf8::codepoints(meta_symbol).size() != 1) {
    throw parameter_error("meta symbol must be a single character");
  }

  std::map<std::string, std::int64_t> word_freq;
  for (const std::string& line : corpus) {
    for (const std::string& word : split_words(line)) word_freq[word] += 1;
  }
  if (word_freq.empty()) throw parameter_error("training corpus has no words");

  SymbolTable symtab;
  std::vector<TrainerWord> words;
  words.reserve(word_freq.size());
  for (const auto& [text, freq] : word_freq) {
    TrainerWord w;
    w.freq = freq;
    w.syms.push_back(symtab.intern(meta_symbol));
    for (const std::string& cp : utf8::codepoints(text)) {
      w.syms.push_back(symtab.intern(cp));
    }
    words.push_back(std::move(w));
  }

  SubwordModel model;
  model.meta_symbol = meta_symbol;
  model.vocab = Vocabulary::with_specials();
  {
    std::vector<std::string> base = symtab.strings;
    std::sort(base.begin(), base.end());
    const int needed =
        static_cast<int>(base.size()) + Vocabulary::kNumSpecials;
    if (vocab_size < needed) {
      throw parameter_error("vocab_size " + std::to_string(vocab_size) +
                            " is smaller than base alphabet plus specials (" +
                            std::to_string(needed) + ")");
    }
    for (const std::string& s : base) model.vocab.add(s);
  }

  // Incremental pair bookkeeping: counts plus an inverted index from pair
  // to candidate word ids. Index entries may go stale; merge steps re-check
  // the actual symbols.
  std::unordered_map<std::uint64_t, std::int64_t> counts;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> where;
  for (std::uint32_t wi = 0; wi < words.size(); ++wi) {
    const TrainerWord& w = words[wi];
    for (std::size_t i = 0; i + 1 < w.syms.size(); ++i) {
      const std::uint64_t key = pack(w.syms[i], w.syms[i + 1]);
      counts[key] += w.freq;
      auto& list = where[key];
      if (list.empty() || list.back() != wi) list.push_back(wi);
    }
  }

  while (model.vocab.size() < vocab_size) {
    std::uint64_t best_key = 0;
    std::int64_t best_count = 0;
    int best_left = -1, best_right = -1;
    for (const auto& [key, count] : counts) {
      if (count < best_count) continue;
      const int left = static_cast<int>(key >> 32);
      const int right = static_cast<int>(key & 0xffffffffu);
      if (count > best_count) {
        best_key = key;
        best_count = count;
        best_left = left;
        best_right = right;
        continue;
      }
      // Tie: lexicographically smallest (left, right) token pair.
      const std::string& l = symtab.strings[left];
      const std::string& r = symtab.strings[right];
      const std::string& bl = symtab.strings[best_left];
      const std::string& br = symtab.strings[best_right];
      if (l < bl || (l == bl && r < br)) {
        best_key = key;
        best_left = left;
        best_right = right;
      }
    }
    if (best_count < 2) break;  // merging singletons adds nothing

    const std::string merged_str =
        symtab.strings[best_left] + symtab.strings[best_right];
    const int merged = symtab.intern(merged_str);
    model.merges.push_back(
        {symtab.strings[best_left], symtab.strings[best_right]});
    model.vocab.add(merged_str);

    std::vector<std::uint32_t> affected;
    if (const auto it = where.find(best_key); it != where.end()) {
      affected = std::move(it->second);
      where.erase(it);
    }
    std::sort(affected.begin(), affected.end());
    affected.erase(std::unique(affected.begin(), affected.end()),
                   affected.end());

    const auto decrement = [&](std::uint64_t key, std::int64_t freq) {
      const auto it = counts.find(key);
      it->second -= freq;
      if (it->second <= 0) counts.erase(it);
    };

    for (const std::uint32_t wi : affected) {
      TrainerWord& w = words[wi];
      bool present = false;
      for (std::size_t i = 0; i + 1 < w.syms.size(); ++i) {
        if (w.syms[i] == best_left && w.syms[i + 1] == best_right) {
          present = true;
          break;
        }
      }
      if (!present) continue;  // stale index entry

      for (std::size_t i = 0; i + 1 < w.syms.size(); ++i) {
        decrement(pack(w.syms[i], w.syms[i + 1]), w.freq);
      }
      std::vector<int> next;
      next.reserve(w.syms.size());
      for (std::size_t i = 0; i < w.syms.size();) {
        if (i + 1 < w.syms.size() && w.syms[i] == best_left &&
            w.syms[i + 1] == best_right) {
          next.push_back(merged);
          i += 2;
        } else {
          next.push_back(w.syms[i]);
          i += 1;
        }
      }
      w.syms = std::move(next);
      for (std::size_t i = 0; i + 1 < w.syms.size(); ++i) {
        const std::uint64_t key = pack(w.syms[i], w.syms[i + 1]);
        counts[key] += w.freq;
        // Adjacencies not touching the merged token were already indexed.
        if (w.syms[i] == merged || w.syms[i + 1] == merged) {
          auto& list = where[key];
          if (list.empty() || list.back() != wi) list.push_back(wi);
        }
      }
    }
  }

  // Unigram log probabilities from final-token relative frequencies.
  std::vector<std::int64_t> occurrences(symtab.strings.size(), 0);
  std::int64_t total = 0;
  for (const TrainerWord& w : words) {
    for (const int s : w.syms) occurrences[s] += w.freq;
    total += w.freq * static_cast<std::int64_t>(w.syms.size());
  }
  model.unigram_logprob.assign(model.vocab.size(),
                               std::numeric_limits<double>::quiet_NaN());
  for (int id = Vocabulary::kNumSpecials; id < model.vocab.size(); ++id) {
    const auto it = symtab.ids.find(model.vocab.id_to_token[id]);
    const std::int64_t occ = it == symtab.ids.end() ? 0 : occurrences[it->second];
    model.unigram_logprob[id] =
        occ > 0 ? std::log(static_cast<double>(occ) / static_cast<double>(total))
                : -std::numeric_limits<double>::infinity();
  }
  return model;
}

namespace {

// Lowest-rank-first merge application; equivalent to exhausting each rule
// in rank order because a merge can only create pairs of higher rank.
class MergeApplier {
 public:
  explicit MergeApplier(const SubwordModel& model) : model_(model) {
    for (std::size_t rank = 0; rank < model.merges.size(); ++rank) {
      rank_of_.emplace(
          model.merges[rank].left + '\t' + model.merges[rank].right,
          static_cast<int>(rank));
    }
  }

  void apply(SymbolSeq& syms) const {
    while (true) {
      int best_rank = std::numeric_limits<int>::max();
      for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
        const auto it = rank_of_.find(syms[i] + '\t' + syms[i + 1]);
        if (it != rank_of_.end() && it->second < best_rank) {
          best_rank = it->second;
        }
      }
      if (best_rank == std::numeric_limits<int>::max()) return;
      const MergeRule& rule = model_.merges[best_rank];
      const std::string merged = rule.merged();
      SymbolSeq next;
      next.reserve(syms.size());
      for (std::size_t i = 0; i < syms.size();) {
        if (i + 1 < syms.size() && syms[i] == rule.left &&
            syms[i + 1] == rule.right) {
          next.push_back(merged);
          i += 2;
        } else {
          next.push_back(syms[i]);
          i += 1;
        }
      }
      syms = std::move(next);
    }
  }

 private:
  const SubwordModel& model_;
  std::unordered_map<std::string, int> rank_of_;
};

}  // namespace

TokenSequence encode(const SubwordModel& model, std::string_view text,
                     bool add_bos_eos) {
  const MergeApplier applier(model);
  TokenSequence seq;
  if (add_bos_eos) seq.ids.push_back(Vocabulary::kBosId);
  for (const std::string& word : split_words(text)) {
    SymbolSeq syms;
    syms.push_back(model.meta_symbol);
    for (const std::string& cp : utf8::codepoints(word)) syms.push_back(cp);
    applier.apply(syms);
    for (const std::string& sym : syms) {
      const int id = model.vocab.id_of(sym);
      seq.ids.push_back(id >= 0 ? id : Vocabulary::kUnkId);
    }
  }
  if (add_bos_eos) seq.ids.push_back(Vocabulary::kEosId);
  seq.attention_mask.assign(seq.ids.size(), 1);
  return seq;
}

std::string decode(const SubwordModel& model, const TokenSequence& tokens) {
  std::string joined;
  for (std::size_t pos = 0; pos < tokens.ids.size(); ++pos) {
    const int id = tokens.ids[pos];
    if (id < 0 || id >= model.vocab.size()) {
      throw data_error("invalid token id " + std::to_string(id) +
                       " at position " + std::to_string(pos));
    }
    if (Vocabulary::is_special(id)) continue;
    joined += model.vocab.id_to_token[id];
  }
  std::string out;
  out.reserve(joined.size());
  std::size_t i = 0;
  while (i < joined.size()) {
    if (joined.compare(i, model.meta_symbol.size(), model.meta_symbol) == 0) {
      out.push_back(' ');
      i += model.meta_symbol.size();
    } else {
      out.push_back(joined[i]);
      i += 1;
    }
  }
  std::size_t start = 0;
  while (start < out.size() && out[start] == ' ') ++start;
  return out.substr(start);
}

double unigram_logprob_of(const SubwordModel& model,
                          const TokenSequence& tokens, ScoreStats* stats) {
  double sum = 0.0;
  int specials = 0;
  for (std::size_t pos = 0; pos < tokens.ids.size(); ++pos) {
    const int id = tokens.ids[pos];
    if (id < 0 || id >= model.vocab.size()) {
      throw data_error("invalid token id " + std::to_string(id) +
                       " at position " + std::to_string(pos));
    }
    if (Vocabulary::is_special(id)) {
      ++specials;
      continue;
    }
    sum += model.unigram_logprob[id];
  }
  if (stats) stats->special_tokens = specials;
  return sum;
}

void save_model(const SubwordModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write model file: " + path);
  out << "bpe-model v1 vocab=" << model.vocab.size()
      << " meta=" << model.meta_symbol << '\n';
  for (int id = 0; id < model.vocab.size(); ++id) {
    out << model.vocab.id_to_token[id] << '\t'
        << format_double(model.unigram_logprob[id]) << '\n';
  }
  out << "#merges " << model.merges.size() << '\n';
  for (const MergeRule& rule : model.merges) {
    out << rule.left << '\t' << rule.right << '\n';
  }
  if (!out) throw io_error("write failure on model file: " + path);
}

SubwordModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open model file: " + path);

  int line_no = 0;
  std::string line;
  const auto next_line = [&]() {
    if (!std::getline(in, line)) {
      throw parse_error("unexpected end of model file at line " +
                        std::to_string(line_no + 1));
    }
    ++line_no;
  };

  next_line();
  std::istringstream header(line);
  std::string magic, version, vocab_field, meta_field;
  header >> magic >> version >> vocab_field >> meta_field;
  if (magic != "bpe-model" || version != "v1" ||
      vocab_field.rfind("vocab=", 0) != 0 || meta_field.rfind("meta=", 0) != 0) {
    throw parse_error("bad model header at line 1");
  }
  int vocab_count = 0;
  try {
    vocab_count = std::stoi(vocab_field.substr(6));
  } catch (const std::exception&) {
    throw parse_error("bad vocab count at line 1");
  }
  if (vocab_count < Vocabulary::kNumSpecials) {
    throw parse_error("vocab count below specials at line 1");
  }

  SubwordModel model;
  model.meta_symbol = meta_field.substr(5);
  if (utf8::codepoints(model.meta_symbol).size() != 1) {
    throw parse_error("meta symbol must be a single character at line 1");
  }

  for (int id = 0; id < vocab_count; ++id) {
    next_line();
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw parse_error("expected token<TAB>logprob at line " +
                        std::to_string(line_no));
    }
    const std::string token = line.substr(0, tab);
    if (id < Vocabulary::kNumSpecials && token != kSpecialTokens[id]) {
      throw parse_error("expected special token '" +
                        std::string(kSpecialTokens[id]) + "' at line " +
                        std::to_string(line_no));
    }
    if (model.vocab.id_of(token) != -1) {
      throw parse_error("duplicate token '" + token + "' at line " +
                        std::to_string(line_no));
    }
    model.vocab.add(token);
    model.unigram_logprob.push_back(
        parse_double(line.substr(tab + 1), line_no));
  }

  next_line();
  std::istringstream merges_header(line);
  std::string merges_tag;
  std::int64_t merge_count = -1;
  merges_header >> merges_tag >> merge_count;
  if (merges_tag != "#merges" || merge_count < 0) {
    throw parse_error("expected '#merges <count>' at line " +
                      std::to_string(line_no));
  }
  for (std::int64_t i = 0; i < merge_count; ++i) {
    next_line();
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw parse_error("expected left<TAB>right at line " +
                        std::to_string(line_no));
    }
    MergeRule rule{line.substr(0, tab), line.substr(tab + 1)};
    if (model.vocab.id_of(rule.merged()) == -1) {
      throw parse_error("merge output '" + rule.merged() +
                        "' missing from vocabulary at line " +
                        std::to_string(line_no));
    }
    model.merges.push_back(std::move(rule));
  }
  return model;
}

bool structurally_equal(const SubwordModel& a, const SubwordModel& b) {
  if (a.meta_symbol != b.meta_symbol) return false;
  if (a.vocab.id_to_token != b.vocab.id_to_token) return false;
  if (a.merges != b.merges) return false;
  if (a.unigram_logprob.size() != b.unigram_logprob.size()) return false;
  for (std::size_t i = 0; i < a.unigram_logprob.size(); ++i) {
    const double x = a.unigram_logprob[i];
    const double y = b.unigram_logprob[i];
    if (std::isnan(x) != std::isnan(y)) return false;
    if (!std::isnan(x) && x != y) return false;
  }
  return true;
}

}  // namespace mtkit::subword
