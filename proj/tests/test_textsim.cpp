#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mmia/errors.hpp"
#include "mmia/rng.hpp"
#include "mmia/textsim.hpp"

using mmia::Rng;
using mmia::textsim::TokenSeq;

namespace {

// ---- independent oracles -------------------------------------------------
// Brute-force n-gram machinery on token vectors, no shared code with the
// implementation (which counts via joined-string maps).

std::vector<TokenSeq> all_ngrams(const TokenSeq& s, int n) {
  std::vector<TokenSeq> grams;
  for (int i = 0; i + n <= static_cast<int>(s.size()); ++i) {
    grams.emplace_back(s.begin() + i, s.begin() + i + n);
  }
  return grams;
}

int count_occurrences(const std::vector<TokenSeq>& grams, const TokenSeq& g) {
  int c = 0;
  for (const auto& x : grams) {
    if (x == g) ++c;
  }
  return c;
}

// Clipped matches by exhaustive scan over distinct candidate n-grams.
int oracle_clipped_matches(const TokenSeq& cand, const TokenSeq& ref, int n) {
  const auto cg = all_ngrams(cand, n);
  const auto rg = all_ngrams(ref, n);
  std::vector<TokenSeq> seen;
  int matches = 0;
  for (const auto& g : cg) {
    if (std::find(seen.begin(), seen.end(), g) != seen.end()) continue;
    seen.push_back(g);
    matches += std::min(count_occurrences(cg, g), count_occurrences(rg, g));
  }
  return matches;
}

double oracle_bleu(const TokenSeq& cand, const TokenSeq& ref, int n,
                   double eps) {
  if (static_cast<int>(cand.size()) < n) return 0.0;
  double log_sum = 0.0;
  for (int k = 1; k <= n; ++k) {
    const int total = static_cast<int>(cand.size()) - k + 1;
    const int m = oracle_clipped_matches(cand, ref, k);
    log_sum += std::log(m > 0 ? static_cast<double>(m) / total : eps);
  }
  const double bp =
      std::min(1.0, std::exp(1.0 - static_cast<double>(ref.size()) /
                                       static_cast<double>(cand.size())));
  return bp * std::exp(log_sum / n);
}

double oracle_rouge_n(const TokenSeq& cand, const TokenSeq& ref, int n) {
  const int total = static_cast<int>(ref.size()) - n + 1;
  if (total <= 0) return 0.0;
  return static_cast<double>(oracle_clipped_matches(cand, ref, n)) / total;
}

// Full-table LCS, written independently of the rolling-array implementation.
int oracle_lcs(const TokenSeq& a, const TokenSeq& b) {
  const int m = static_cast<int>(a.size());
  const int n = static_cast<int>(b.size());
  std::vector<std::vector<int>> t(m + 1, std::vector<int>(n + 1, 0));
  for (int i = 1; i <= m; ++i) {
    for (int j = 1; j <= n; ++j) {
      t[i][j] = (a[i - 1] == b[j - 1]) ? t[i - 1][j - 1] + 1
                                       : std::max(t[i - 1][j], t[i][j - 1]);
    }
  }
  return t[m][n];
}

double oracle_rouge_l(const TokenSeq& a, const TokenSeq& b) {
  const double lcs = oracle_lcs(a, b);
  if (lcs == 0.0) return 0.0;
  const double p = lcs / static_cast<double>(a.size());
  const double r = lcs / static_cast<double>(b.size());
  return 2.0 * p * r / (p + r);
}

TokenSeq random_seq(Rng& rng, int min_len, int max_len, int vocab) {
  TokenSeq s;
  const int len = min_len + rng.uniform_int(max_len - min_len + 1);
  for (int i = 0; i < len; ++i) {
    s.push_back("w" + std::to_string(rng.uniform_int(vocab)));
  }
  return s;
}

const TokenSeq kDogCand = {"there", "is", "a", "dog", "on", "the", "road"};
const TokenSeq kCatRef = {"this", "is", "a",   "cat",
                          "sitting", "on", "the", "road"};

}  // namespace

TEST_CASE("tokenize lowercases, strips punctuation, splits whitespace") {
  CHECK(mmia::textsim::tokenize("This is a cat.") ==
        TokenSeq{"this", "is", "a", "cat"});
  CHECK(mmia::textsim::tokenize("A  dog") == TokenSeq{"a", "dog"});
  CHECK(mmia::textsim::tokenize("One RED circle!") ==
        TokenSeq{"one", "red", "circle"});
  CHECK_THROWS_AS(mmia::textsim::tokenize("!!!"), mmia::EmptyCaptionError);
  CHECK_THROWS_AS(mmia::textsim::tokenize("   "), mmia::EmptyCaptionError);
}

TEST_CASE("bleu_n hand-derived values") {
  // Identity scores 1 exactly for any order.
  const TokenSeq s = {"a", "b", "c", "d"};
  for (int n = 1; n <= 4; ++n) {
    CHECK(mmia::textsim::bleu_n(s, s, n) == 1.0);
  }

  // p1 = 2/3, p2 = 1/2, BP = 1 -> sqrt(1/3).
  const TokenSeq cand = {"a", "b", "c"};
  const TokenSeq ref = {"a", "b", "d"};
  CHECK(mmia::textsim::bleu_n(cand, ref, 2) ==
        doctest::Approx(std::sqrt(1.0 / 3.0)).epsilon(1e-12));

  // p1 = 5/7 with BP = exp(1 - 8/7).
  CHECK(mmia::textsim::bleu_n(kDogCand, kCatRef, 1) ==
        doctest::Approx(std::exp(1.0 - 8.0 / 7.0) * 5.0 / 7.0).epsilon(1e-12));

  // Candidate shorter than n scores 0, no error.
  CHECK(mmia::textsim::bleu_n({"a"}, ref, 2) == 0.0);
}

TEST_CASE("rouge_n hand-derived values") {
  const TokenSeq s = {"x", "y", "z"};
  CHECK(mmia::textsim::rouge_n(s, s, 1) == 1.0);
  CHECK(mmia::textsim::rouge_n(s, s, 2) == 1.0);

  // Unigram recall 5/8 on the worked example.
  CHECK(mmia::textsim::rouge_n(kDogCand, kCatRef, 1) ==
        doctest::Approx(0.625).epsilon(1e-12));

  CHECK(mmia::textsim::rouge_n({"a", "b"}, {"c", "d"}, 1) == 0.0);
  // Reference shorter than n scores 0.
  CHECK(mmia::textsim::rouge_n(s, {"x"}, 2) == 0.0);
}

TEST_CASE("rouge_l hand-derived values") {
  // LCS = 5, P = 5/7, R = 5/8 -> F1 = 2/3.
  CHECK(mmia::textsim::rouge_l(kDogCand, kCatRef) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  const TokenSeq s = {"p", "q", "r"};
  CHECK(mmia::textsim::rouge_l(s, s) == 1.0);
  CHECK(mmia::textsim::rouge_l({"a", "b"}, {"c", "d"}) == 0.0);
}

TEST_CASE("metrics agree with brute-force oracles on random pairs") {
  Rng rng(20240913);
  for (int trial = 0; trial < 100; ++trial) {
    const TokenSeq a = random_seq(rng, 1, 20, 10);
    const TokenSeq b = random_seq(rng, 1, 20, 10);
    for (int n = 1; n <= 4; ++n) {
      const double bl = mmia::textsim::bleu_n(a, b, n);
      const double ro = mmia::textsim::rouge_n(a, b, n);
      CHECK(bl == doctest::Approx(oracle_bleu(a, b, n, 1e-9)).epsilon(1e-9));
      CHECK(ro == doctest::Approx(oracle_rouge_n(a, b, n)).epsilon(1e-9));
      CHECK(bl >= 0.0);
      CHECK(bl <= 1.0 + 1e-12);
      CHECK(ro >= 0.0);
      CHECK(ro <= 1.0 + 1e-12);
    }
    const double rl = mmia::textsim::rouge_l(a, b);
    CHECK(rl == doctest::Approx(oracle_rouge_l(a, b)).epsilon(1e-9));
    // F1 with beta = 1 is symmetric.
    CHECK(rl == doctest::Approx(mmia::textsim::rouge_l(b, a)).epsilon(1e-12));
  }
}

TEST_CASE("score_vector packs the four metrics") {
  const TokenSeq s = {"one", "red", "circle", "on", "gray"};
  const auto same = mmia::textsim::score_vector(s, s);
  CHECK(same.bleu1 == 1.0);
  CHECK(same.bleu2 == 1.0);
  CHECK(same.bleu3 == 1.0);
  CHECK(same.rouge_l == 1.0);

  const auto disjoint =
      mmia::textsim::score_vector({"a", "b", "c"}, {"x", "y", "z"});
  CHECK(disjoint.bleu1 < 1e-6);
  CHECK(disjoint.bleu2 < 1e-6);
  CHECK(disjoint.bleu3 < 1e-6);
  CHECK(disjoint.rouge_l == 0.0);

  const auto paper = mmia::textsim::score_vector(kDogCand, kCatRef);
  CHECK(paper.bleu1 == doctest::Approx(0.6192).epsilon(1e-3));
  CHECK(paper.rouge_l == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  CHECK_THROWS_AS(mmia::textsim::score_vector({}, s),
                  mmia::EmptyCaptionError);
}

TEST_CASE("multi-reference scoring takes the componentwise max") {
  const TokenSeq cand = {"a", "b", "c"};
  const std::vector<TokenSeq> refs = {{"x", "y", "z"}, {"a", "b", "c"}};
  const auto s = mmia::textsim::score_vector_multi(cand, refs);
  CHECK(s.bleu1 == 1.0);
  CHECK(s.rouge_l == 1.0);

  // Max can mix components from different references.
  const std::vector<TokenSeq> mixed = {{"a", "b", "q"}, {"c", "p", "r"}};
  const auto m = mmia::textsim::score_vector_multi(cand, mixed);
  CHECK(m.bleu1 ==
        doctest::Approx(mmia::textsim::bleu_n(cand, mixed[0], 1)).epsilon(1e-12));
  CHECK_THROWS_AS(mmia::textsim::score_vector_multi(cand, {}),
                  mmia::EmptyCaptionError);
}
