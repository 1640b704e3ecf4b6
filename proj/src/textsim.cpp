#include "mmia/textsim.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include "mmia/errors.hpp"

namespace mmia::textsim {

namespace {

// Counts of the distinct n-grams of s. An n-gram is the n tokens joined
// with '\x1f' (tokens never contain whitespace or control bytes).
std::map<std::string, int> ngram_counts(const TokenSeq& s, int n) {
  std::map<std::string, int> counts;
  if (static_cast<int>(s.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    std::string key = s[i];
    for (int k = 1; k < n; ++k) {
      key += '\x1f';
      key += s[i + k];
    }
    ++counts[key];
  }
  return counts;
}

// Clipped match count: sum over n-grams of min(candidate count, ref count).
long clipped_matches(const TokenSeq& candidate, const TokenSeq& reference,
                     int n) {
  const auto cand = ngram_counts(candidate, n);
  const auto ref = ngram_counts(reference, n);
  long matches = 0;
  for (const auto& [gram, count] : cand) {
    auto it = ref.find(gram);
    if (it != ref.end()) matches += std::min(count, it->second);
  }
  return matches;
}

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b) {
  const std::size_t m = a.size();
  const std::size_t n = b.size();
  std::vector<std::size_t> prev(n + 1, 0), cur(n + 1, 0);
  for (std::size_t i = 1; i <= m; ++i) {
    for (std::size_t j = 1; j <= n; ++j) {
      cur[j] = (a[i - 1] == b[j - 1]) ? prev[j - 1] + 1
                                      : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[n];
}

}  // namespace

TokenSeq tokenize(const std::string& text) {
  TokenSeq tokens;
  std::string word;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      word += static_cast<char>(std::tolower(c));
    } else if (std::isspace(c)) {
      if (!word.empty()) {
        tokens.push_back(word);
        word.clear();
      }
    }
    // Punctuation and other bytes are dropped.
  }
  if (!word.empty()) tokens.push_back(word);
  if (tokens.empty()) {
    throw EmptyCaptionError("caption is empty after tokenization: \"" + text +
                            "\"");
  }
  return tokens;
}

double bleu_n(const TokenSeq& candidate, const TokenSeq& reference, int n,
              double eps) {
  const long c = static_cast<long>(candidate.size());
  const long r = static_cast<long>(reference.size());
  if (c < n) return 0.0;

  double log_sum = 0.0;
  for (int k = 1; k <= n; ++k) {
    const long total = c - k + 1;
    const long matches = clipped_matches(candidate, reference, k);
    const double p = matches > 0
                         ? static_cast<double>(matches) / static_cast<double>(total)
                         : eps;
    log_sum += std::log(p);
  }
  const double bp = std::min(1.0, std::exp(1.0 - static_cast<double>(r) /
                                                     static_cast<double>(c)));
  return bp * std::exp(log_sum / n);
}

double rouge_n(const TokenSeq& candidate, const TokenSeq& reference, int n) {
  const long ref_total = static_cast<long>(reference.size()) - n + 1;
  if (ref_total <= 0) return 0.0;
  const long matches = clipped_matches(candidate, reference, n);
  return static_cast<double>(matches) / static_cast<double>(ref_total);
}

double rouge_l(const TokenSeq& candidate, const TokenSeq& reference) {
  const double lcs = static_cast<double>(lcs_length(candidate, reference));
  if (lcs == 0.0) return 0.0;
  const double p = lcs / static_cast<double>(candidate.size());
  const double r = lcs / static_cast<double>(reference.size());
  return 2.0 * p * r / (p + r);
}

ScoreVector score_vector(const TokenSeq& candidate, const TokenSeq& reference) {
  if (candidate.empty() || reference.empty()) {
    throw EmptyCaptionError("score_vector requires non-empty token sequences");
  }
  ScoreVector s;
  s.bleu1 = bleu_n(candidate, reference, 1);
  s.bleu2 = bleu_n(candidate, reference, 2);
  s.bleu3 = bleu_n(candidate, reference, 3);
  s.rouge_l = rouge_l(candidate, reference);
  return s;
}

ScoreVector score_vector_multi(const TokenSeq& candidate,
                               const std::vector<TokenSeq>& references) {
  if (references.empty()) {
    throw EmptyCaptionError("score_vector_multi requires >= 1 reference");
  }
  ScoreVector best = score_vector(candidate, references.front());
  for (std::size_t i = 1; i < references.size(); ++i) {
    const ScoreVector s = score_vector(candidate, references[i]);
    best.bleu1 = std::max(best.bleu1, s.bleu1);
    best.bleu2 = std::max(best.bleu2, s.bleu2);
    best.bleu3 = std::max(best.bleu3, s.bleu3);
    best.rouge_l = std::max(best.rouge_l, s.rouge_l);
  }
  return best;
}

}  // namespace mmia::textsim
