#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmia/nn.hpp"
#include "mmia/synthdata.hpp"
#include "mmia/textsim.hpp"
#include "mmia/train.hpp"
#include "mmia/vocab.hpp"

namespace mmia::captioner {

// R: deep-narrow encoder, four conv blocks into a 64-d embedding.
// V: shallow-wide encoder, two conv blocks into a 128-d embedding.
// Both feed a single-layer GRU decoder over the corpus vocabulary.
enum class Arch { R, V };

char arch_letter(Arch a);
Arch arch_from_letter(char letter);  // throws ParseError

struct EncoderLayout {
  struct Block {
    std::size_t W, b;
    int cin, cout, h, w;  // input spatial size of the block
    int pools = 1;        // 2x2 average pools applied after the relu
  };
  std::vector<Block> blocks;
  std::size_t fc_W, fc_b;      // flattened conv output -> embed_dim
  std::size_t h0_W, h0_b;      // embed_dim -> hidden, tanh
  std::size_t cond_W, cond_b;  // embed_dim -> per-step conditioning, tanh
  int flat = 0;
  int embed_dim = 0;
  int cond_dim = 0;
};

// The GRU input at each step is the previous token's embedding concatenated
// with the image conditioning vector, so the decoder sees the image at every
// step rather than only through the initial state.
struct DecoderLayout {
  std::size_t tok_embed;  // [vocab, tok_dim]
  nn::GruParams gru;      // input = tok_dim + cond_dim
  std::size_t out_W, out_b;  // hidden -> vocab logits
  int tok_dim = 0;
  int hidden = 0;
};

struct CaptionModel {
  Arch arch = Arch::R;
  Vocab vocab;
  int img_h = 32, img_w = 32, img_c = 3;
  int trained_epochs = 0;
  nn::ParamStore params;
  EncoderLayout enc;
  DecoderLayout dec;
};

// Deterministic initialization per seed. Throws on an empty vocabulary or
// an image size the conv/pool stack cannot consume.
CaptionModel build_model(Arch arch, const Vocab& vocab, std::uint64_t seed,
                         int img_h = 32, int img_w = 32, int img_c = 3);

Vocab vocab_from_pairs(const std::vector<synthdata::ImageTextPair>& pairs);

// Mean over samples of each sample's per-token cross-entropy. grad must be
// zeroed to params.size(); the first caption of each pair is the target.
double loss_and_grad(const CaptionModel& model,
                     std::span<const synthdata::ImageTextPair> batch,
                     nn::Vec& grad);

// Mini-batch SGD on the token cross-entropy, with optional l2 penalty,
// augmentation, and clipped+noised per-sample gradients. Returns per-epoch
// mean loss. Deterministic per cfg.seed. Throws DivergenceError when the
// loss goes non-finite.
std::vector<double> train(CaptionModel& model,
                          const std::vector<synthdata::ImageTextPair>& pairs,
                          const TrainConfig& cfg);

// Greedy argmax decode from BOS until EOS or max_len tokens; special tokens
// never appear in the output.
textsim::TokenSeq caption(const CaptionModel& model,
                          const synthdata::ImageTensor& image, int max_len);

void save_checkpoint(const CaptionModel& model,
                     const std::filesystem::path& path);
// expect, when set, demands that architecture; mismatch -> CheckpointError.
CaptionModel load_checkpoint(const std::filesystem::path& path,
                             std::optional<Arch> expect = std::nullopt);

}  // namespace mmia::captioner
