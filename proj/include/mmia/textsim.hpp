#pragma once

#include <string>
#include <vector>

namespace mmia::textsim {

// Ordered list of lowercase word tokens. Non-empty for any scored caption.
using TokenSeq = std::vector<std::string>;

// Per-sample similarity scores, each component in [0, 1].
struct ScoreVector {
  double bleu1 = 0.0;
  double bleu2 = 0.0;
  double bleu3 = 0.0;
  double rouge_l = 0.0;

  double operator[](int i) const {
    switch (i) {
      case 0: return bleu1;
      case 1: return bleu2;
      case 2: return bleu3;
      default: return rouge_l;
    }
  }
};

constexpr double kBleuEps = 1e-9;

// Lowercase, strip punctuation, split on whitespace.
// Throws EmptyCaptionError if nothing survives.
TokenSeq tokenize(const std::string& text);

// Cumulative sentence-level BLEU-n with uniform weights, clipped n-gram
// precisions, brevity penalty, and add-eps smoothing for zero matches.
// A candidate shorter than n tokens scores 0.
double bleu_n(const TokenSeq& candidate, const TokenSeq& reference, int n,
              double eps = kBleuEps);

// N-gram recall: clipped matches over the reference n-gram count.
// A reference shorter than n tokens scores 0.
double rouge_n(const TokenSeq& candidate, const TokenSeq& reference, int n);

// LCS-based F-measure with beta = 1; symmetric in its arguments.
double rouge_l(const TokenSeq& candidate, const TokenSeq& reference);

// (BLEU-1, BLEU-2, BLEU-3, ROUGE-L) against a single reference.
ScoreVector score_vector(const TokenSeq& candidate, const TokenSeq& reference);

// Componentwise max over references; the usual convention when a sample
// carries several captions.
ScoreVector score_vector_multi(const TokenSeq& candidate,
                               const std::vector<TokenSeq>& references);

}  // namespace mmia::textsim
