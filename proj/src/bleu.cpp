#include "mtkit/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "mtkit/errors.hpp"

namespace mtkit::bleu {

namespace {

void validate(const BleuConfig& config) {
  if (config.max_n < 1) throw parameter_error("max_n must be >= 1");
  if (!config.weights.empty()) {
    if (static_cast<int>(config.weights.size()) != config.max_n) {
      throw parameter_error("expected " + std::to_string(config.max_n) +
                            " weights, got " +
                            std::to_string(config.weights.size()));
    }
    double sum = 0.0;
    for (double w : config.weights) {
      if (w < 0.0) throw parameter_error("weights must be non-negative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw parameter_error("weights must sum to 1");
    }
  }
  if (config.smoothing == BleuConfig::Smoothing::AddEpsilon &&
      !(config.epsilon > 0.0)) {
    throw parameter_error("AddEpsilon smoothing needs epsilon > 0");
  }
}

std::vector<double> effective_weights(const BleuConfig& config) {
  if (!config.weights.empty()) return config.weights;
  return std::vector<double>(config.max_n, 1.0 / config.max_n);
}

// Closest reference length for one sentence, ties toward the shorter.
std::int64_t closest_reference_length(const std::vector<Tokens>& references,
                                      std::int64_t candidate_length) {
  std::int64_t best = static_cast<std::int64_t>(references.front().size());
  for (const Tokens& ref : references) {
    const std::int64_t len = static_cast<std::int64_t>(ref.size());
    const std::int64_t diff = std::abs(len - candidate_length);
    const std::int64_t best_diff = std::abs(best - candidate_length);
    if (diff < best_diff || (diff == best_diff && len < best)) best = len;
  }
  return best;
}

struct PooledCounts {
  std::vector<std::int64_t> matched;  // per n
  std::vector<std::int64_t> total;    // per n
  std::int64_t candidate_length = 0;
  std::int64_t reference_length = 0;
};

void accumulate_sentence(const Tokens& candidate,
                         const std::vector<Tokens>& references, int max_n,
                         PooledCounts& acc) {
  acc.candidate_length += static_cast<std::int64_t>(candidate.size());
  acc.reference_length += closest_reference_length(
      references, static_cast<std::int64_t>(candidate.size()));
  for (int n = 1; n <= max_n; ++n) {
    const Fraction p = modified_precision(candidate, references, n);
    // Pool the real candidate n-gram count, not the 0/1 degenerate
    // denominator modified_precision reports for too-short sentences.
    const std::int64_t cand_ngrams =
        static_cast<std::int64_t>(candidate.size()) >= n
            ? static_cast<std::int64_t>(candidate.size()) - n + 1
            : 0;
    acc.matched[n - 1] += p.num;
    acc.total[n - 1] += cand_ngrams;
  }
}

BleuReport finish(PooledCounts&& acc, const BleuConfig& config) {
  BleuReport report;
  report.candidate_length = acc.candidate_length;
  report.reference_length = acc.reference_length;
  report.precisions.reserve(config.max_n);
  for (int n = 1; n <= config.max_n; ++n) {
    const std::int64_t den = acc.total[n - 1];
    report.precisions.push_back(
        den == 0 ? Fraction{0, 1} : Fraction{acc.matched[n - 1], den});
  }
  report.brevity_penalty =
      brevity_penalty(report.candidate_length, report.reference_length);

  const std::vector<double> weights = effective_weights(config);
  double log_sum = 0.0;
  bool zero_precision = false;
  for (int n = 0; n < config.max_n; ++n) {
    const Fraction& p = report.precisions[n];
    double value;
    if (config.smoothing == BleuConfig::Smoothing::AddEpsilon) {
      value = (static_cast<double>(p.num) + config.epsilon) /
              static_cast<double>(std::max<std::int64_t>(p.den, 1));
    } else {
      if (p.num == 0) {
        zero_precision = true;
        break;
      }
      value = p.value();
    }
    log_sum += weights[n] * std::log(value);
  }
  report.score =
      zero_precision ? 0.0 : report.brevity_penalty * std::exp(log_sum);
  return report;
}

}  // namespace

Tokens tokenize(std::string_view normalized_text) {
  Tokens tokens;
  std::size_t i = 0;
  while (i < normalized_text.size()) {
    const std::size_t j = normalized_text.find(' ', i);
    if (j == std::string_view::npos) {
      tokens.emplace_back(normalized_text.substr(i));
      break;
    }
    if (j > i) tokens.emplace_back(normalized_text.substr(i, j - i));
    i = j + 1;
  }
  return tokens;
}

std::map<Tokens, std::int64_t> ngram_counts(const Tokens& tokens, int n) {
  if (n < 1) throw parameter_error("n must be >= 1");
  std::map<Tokens, std::int64_t> counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    counts[Tokens(tokens.begin() + i, tokens.begin() + i + n)] += 1;
  }
  return counts;
}

Fraction modified_precision(const Tokens& candidate,
                            const std::vector<Tokens>& references, int n) {
  if (references.empty()) {
    throw parameter_error("at least one reference required");
  }
  const auto cand_counts = ngram_counts(candidate, n);
  std::int64_t total = 0;
  for (const auto& [ngram, count] : cand_counts) total += count;
  if (total == 0) return {0, 1};

  std::map<Tokens, std::int64_t> max_ref_counts;
  for (const Tokens& ref : references) {
    for (const auto& [ngram, count] : ngram_counts(ref, n)) {
      auto& slot = max_ref_counts[ngram];
      slot = std::max(slot, count);
    }
  }
  std::int64_t matched = 0;
  for (const auto& [ngram, count] : cand_counts) {
    const auto it = max_ref_counts.find(ngram);
    if (it != max_ref_counts.end()) matched += std::min(count, it->second);
  }
  return {matched, total};
}

double brevity_penalty(std::int64_t c, std::int64_t r) {
  if (c == 0) return 0.0;
  if (c > r) return 1.0;
  return std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));
}

BleuReport corpus_bleu(const std::vector<Tokens>& candidates,
                       const std::vector<std::vector<Tokens>>& references,
                       const BleuConfig& config) {
  validate(config);
  if (candidates.empty()) throw parameter_error("empty corpus");
  if (candidates.size() != references.size()) {
    throw parameter_error("candidate/reference count mismatch: " +
                          std::to_string(candidates.size()) + " vs " +
                          std::to_string(references.size()));
  }
  for (const auto& refs : references) {
    if (refs.empty()) {
      throw parameter_error("every sentence needs at least one reference");
    }
  }

  PooledCounts acc;
  acc.matched.assign(config.max_n, 0);
  acc.total.assign(config.max_n, 0);

  const std::int64_t count = static_cast<std::int64_t>(candidates.size());
#pragma omp parallel
  {
    PooledCounts local;
    local.matched.assign(config.max_n, 0);
    local.total.assign(config.max_n, 0);
#pragma omp for nowait
    for (std::int64_t i = 0; i < count; ++i) {
      accumulate_sentence(candidates[i], references[i], config.max_n, local);
    }
    // Integer sums commute, so the merge order does not affect the result.
#pragma omp critical
    {
      for (int n = 0; n < config.max_n; ++n) {
        acc.matched[n] += local.matched[n];
        acc.total[n] += local.total[n];
      }
      acc.candidate_length += local.candidate_length;
      acc.reference_length += local.reference_length;
    }
  }
  return finish(std::move(acc), config);
}

BleuReport sentence_bleu(const Tokens& candidate,
                         const std::vector<Tokens>& references,
                         const BleuConfig& config) {
  return corpus_bleu({candidate}, {references}, config);
}

std::string to_json(const BleuReport& report) {
  nlohmann::ordered_json j;
  j["score"] = report.score;
  j["bp"] = report.brevity_penalty;
  j["c"] = report.candidate_length;
  j["r"] = report.reference_length;
  for (std::size_t n = 0; n < report.precisions.size(); ++n) {
    j["p" + std::to_string(n + 1)] = {report.precisions[n].num,
                                      report.precisions[n].den};
  }
  return j.dump();
}

BleuReport from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw parse_error(std::string("bad BLEU report JSON: ") + e.what());
  }
  BleuReport report;
  try {
    report.score = j.at("score").get<double>();
    report.brevity_penalty = j.at("bp").get<double>();
    report.candidate_length = j.at("c").get<std::int64_t>();
    report.reference_length = j.at("r").get<std::int64_t>();
    for (int n = 1; j.contains("p" + std::to_string(n)); ++n) {
      const auto& p = j.at("p" + std::to_string(n));
      report.precisions.push_back(
          {p.at(0).get<std::int64_t>(), p.at(1).get<std::int64_t>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(std::string("bad BLEU report fields: ") + e.what());
  }
  return report;
}

std::string display_score(const BleuReport& report) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", report.score * 100.0);
  return buf;
}

}  // namespace mtkit::bleu
