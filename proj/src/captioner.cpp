#include "mmia/captioner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "mmia/checkpoint.hpp"
#include "mmia/errors.hpp"

namespace mmia::captioner {

namespace {

constexpr int kHidden = 64;
constexpr int kTokDim = 32;
constexpr int kCondDim = 32;

struct ArchSpec {
  std::vector<int> channels;
  int pools_per_block;
  int embed_dim;
};

// R: deep and narrow, one pool per block. V: shallow and wide, two pools
// per block so the flattened feature stays small.
ArchSpec arch_spec(Arch a) {
  if (a == Arch::R) return {{8, 16, 32, 32}, 1, 64};
  return {{16, 32}, 2, 128};
}

// Forward activations for one image through the conv/pool encoder.
struct EncoderCache {
  // per block: conv output (pre-relu not stored; relu output suffices),
  // relu output, pooled output
  std::vector<nn::Vec> conv, relu, pool;
  nn::Vec embed;  // fc output
  nn::Vec h0;     // tanh initial state
  nn::Vec cond;   // tanh per-step conditioning
};

void encoder_fwd(const CaptionModel& m, const double* image,
                 EncoderCache& cache) {
  const auto& P = m.params.values;
  const int n_blocks = static_cast<int>(m.enc.blocks.size());
  cache.conv.resize(n_blocks);
  cache.relu.resize(n_blocks);
  cache.pool.resize(n_blocks);
  const double* x = image;
  for (int b = 0; b < n_blocks; ++b) {
    const auto& blk = m.enc.blocks[b];
    const std::size_t area = static_cast<std::size_t>(blk.h) * blk.w;
    cache.conv[b].assign(blk.cout * area, 0.0);
    nn::conv3_fwd(P.data() + blk.W, P.data() + blk.b, x, cache.conv[b].data(),
                  blk.cin, blk.cout, blk.h, blk.w);
    cache.relu[b].resize(cache.conv[b].size());
    nn::relu_fwd(cache.conv[b].data(), cache.relu[b].data(),
                 static_cast<int>(cache.conv[b].size()));
    nn::Vec in = cache.relu[b];
    int h = blk.h, w = blk.w;
    for (int p = 0; p < blk.pools; ++p) {
      nn::Vec out(static_cast<std::size_t>(blk.cout) * (h / 2) * (w / 2));
      nn::avgpool2_fwd(in.data(), out.data(), blk.cout, h, w);
      in = std::move(out);
      h /= 2;
      w /= 2;
    }
    cache.pool[b] = std::move(in);
    x = cache.pool[b].data();
  }
  cache.embed.assign(m.enc.embed_dim, 0.0);
  nn::linear_fwd(P.data() + m.enc.fc_W, P.data() + m.enc.fc_b, x,
                 cache.embed.data(), m.enc.embed_dim, m.enc.flat);
  nn::Vec pre(kHidden);
  nn::linear_fwd(P.data() + m.enc.h0_W, P.data() + m.enc.h0_b,
                 cache.embed.data(), pre.data(), kHidden, m.enc.embed_dim);
  cache.h0.resize(kHidden);
  nn::tanh_fwd(pre.data(), cache.h0.data(), kHidden);
  nn::Vec cpre(m.enc.cond_dim);
  nn::linear_fwd(P.data() + m.enc.cond_W, P.data() + m.enc.cond_b,
                 cache.embed.data(), cpre.data(), m.enc.cond_dim,
                 m.enc.embed_dim);
  cache.cond.resize(m.enc.cond_dim);
  nn::tanh_fwd(cpre.data(), cache.cond.data(), m.enc.cond_dim);
}

// dh0 and dcond -> encoder parameter gradients (image gradient discarded).
void encoder_bwd(const CaptionModel& m, const double* image,
                 const EncoderCache& cache, const double* dh0,
                 const double* dcond, nn::Vec& grad) {
  const auto& P = m.params.values;
  nn::Vec dembed(m.enc.embed_dim, 0.0);
  nn::Vec dpre(kHidden, 0.0);
  nn::tanh_bwd(cache.h0.data(), dh0, dpre.data(), kHidden);
  nn::linear_bwd(P.data() + m.enc.h0_W, cache.embed.data(), dpre.data(),
                 dembed.data(), grad.data() + m.enc.h0_W,
                 grad.data() + m.enc.h0_b, kHidden, m.enc.embed_dim);
  nn::Vec dcpre(m.enc.cond_dim, 0.0);
  nn::tanh_bwd(cache.cond.data(), dcond, dcpre.data(), m.enc.cond_dim);
  nn::linear_bwd(P.data() + m.enc.cond_W, cache.embed.data(), dcpre.data(),
                 dembed.data(), grad.data() + m.enc.cond_W,
                 grad.data() + m.enc.cond_b, m.enc.cond_dim, m.enc.embed_dim);

  const int n_blocks = static_cast<int>(m.enc.blocks.size());
  const double* flat_in = cache.pool[n_blocks - 1].data();
  nn::Vec dflat(m.enc.flat, 0.0);
  nn::linear_bwd(P.data() + m.enc.fc_W, flat_in, dembed.data(), dflat.data(),
                 grad.data() + m.enc.fc_W, grad.data() + m.enc.fc_b,
                 m.enc.embed_dim, m.enc.flat);

  nn::Vec dpool = std::move(dflat);
  for (int b = n_blocks - 1; b >= 0; --b) {
    const auto& blk = m.enc.blocks[b];
    // Expand through the pool chain back to the relu resolution.
    for (int p = blk.pools - 1; p >= 0; --p) {
      const int h = blk.h >> p, w = blk.w >> p;
      nn::Vec up(static_cast<std::size_t>(blk.cout) * h * w, 0.0);
      nn::avgpool2_bwd(dpool.data(), up.data(), blk.cout, h, w);
      dpool = std::move(up);
    }
    nn::Vec drelu = std::move(dpool);
    nn::Vec dconv(cache.conv[b].size(), 0.0);
    nn::relu_bwd(cache.relu[b].data(), drelu.data(), dconv.data(),
                 static_cast<int>(drelu.size()));
    const double* x = b == 0 ? image : cache.pool[b - 1].data();
    nn::Vec dx;
    double* dx_ptr = nullptr;
    if (b > 0) {
      dx.assign(cache.pool[b - 1].size(), 0.0);
      dx_ptr = dx.data();
    }
    nn::conv3_bwd(P.data() + blk.W, x, dconv.data(), dx_ptr,
                  grad.data() + blk.W, grad.data() + blk.b, blk.cin, blk.cout,
                  blk.h, blk.w);
    dpool = std::move(dx);
  }
}

// Token ids for one caption: inputs start at BOS, targets end at EOS.
void caption_ids(const Vocab& vocab, const textsim::TokenSeq& caption,
                 std::vector<int>& inputs, std::vector<int>& targets) {
  inputs.clear();
  targets.clear();
  inputs.push_back(Vocab::kBos);
  for (const auto& tok : caption) {
    const int id = vocab.id(tok);
    inputs.push_back(id);
    targets.push_back(id);
  }
  targets.push_back(Vocab::kEos);  // the last caption token predicts EOS
}

// Per-sample loss (mean CE over the sample's tokens); accumulates
// grad * weight into grad when grad is non-null.
double sample_loss(const CaptionModel& m, const synthdata::ImageTextPair& pair,
                   nn::Vec* grad, double weight) {
  const auto& P = m.params.values;
  EncoderCache enc;
  encoder_fwd(m, pair.image.pixels.data(), enc);

  std::vector<int> inputs, targets;
  caption_ids(m.vocab, pair.captions.front(), inputs, targets);
  const int steps = static_cast<int>(inputs.size());
  const int V = m.vocab.size();

  const int in_dim = m.dec.tok_dim + m.enc.cond_dim;
  const int out_in = kHidden + m.enc.cond_dim;
  std::vector<nn::GruCache> caches(steps);
  std::vector<nn::Vec> hs(steps + 1);
  hs[0] = enc.h0;
  std::vector<nn::Vec> dlogits(grad ? steps : 0);
  double loss = 0.0;
  nn::Vec logits(V);
  nn::Vec x(in_dim);
  nn::Vec out_x(out_in);
  std::copy(enc.cond.begin(), enc.cond.end(), x.begin() + m.dec.tok_dim);
  std::copy(enc.cond.begin(), enc.cond.end(), out_x.begin() + kHidden);
  for (int t = 0; t < steps; ++t) {
    const double* e = P.data() + m.dec.tok_embed +
                      static_cast<std::size_t>(inputs[t]) * m.dec.tok_dim;
    std::copy(e, e + m.dec.tok_dim, x.begin());
    hs[t + 1].resize(kHidden);
    nn::gru_fwd(P, m.dec.gru, x.data(), hs[t].data(), hs[t + 1].data(),
                grad ? &caches[t] : nullptr);
    std::copy(hs[t + 1].begin(), hs[t + 1].end(), out_x.begin());
    nn::linear_fwd(P.data() + m.dec.out_W, P.data() + m.dec.out_b, out_x.data(),
                   logits.data(), V, out_in);
    if (grad) {
      dlogits[t].resize(V);
      loss += nn::softmax_ce(logits.data(), V, targets[t], dlogits[t].data());
    } else {
      loss += nn::softmax_ce(logits.data(), V, targets[t], nullptr);
    }
  }
  const double inv_tokens = 1.0 / static_cast<double>(steps);
  loss *= inv_tokens;

  if (grad) {
    const double scale = weight * inv_tokens;
    nn::Vec dh(kHidden, 0.0);
    nn::Vec dcond(m.enc.cond_dim, 0.0);
    nn::Vec dout(out_in);
    for (int t = steps - 1; t >= 0; --t) {
      for (double& g : dlogits[t]) g *= scale;
      std::fill(dout.begin(), dout.end(), 0.0);
      std::copy(hs[t + 1].begin(), hs[t + 1].end(), out_x.begin());
      nn::linear_bwd(P.data() + m.dec.out_W, out_x.data(), dlogits[t].data(),
                     dout.data(), grad->data() + m.dec.out_W,
                     grad->data() + m.dec.out_b, V, out_in);
      for (int i = 0; i < kHidden; ++i) dh[i] += dout[i];
      for (int i = 0; i < m.enc.cond_dim; ++i) dcond[i] += dout[kHidden + i];
      nn::Vec dx(in_dim, 0.0);
      nn::Vec dh_prev(kHidden, 0.0);
      nn::gru_bwd(P, m.dec.gru, caches[t], dh.data(), dx.data(),
                  dh_prev.data(), *grad);
      double* ge = grad->data() + m.dec.tok_embed +
                   static_cast<std::size_t>(inputs[t]) * m.dec.tok_dim;
      for (int i = 0; i < m.dec.tok_dim; ++i) ge[i] += dx[i];
      for (int i = 0; i < m.enc.cond_dim; ++i) dcond[i] += dx[m.dec.tok_dim + i];
      dh = std::move(dh_prev);
    }
    encoder_bwd(m, pair.image.pixels.data(), enc, dh.data(), dcond.data(),
                *grad);
  }
  return loss;
}

}  // namespace

char arch_letter(Arch a) { return a == Arch::R ? 'R' : 'V'; }

Arch arch_from_letter(char letter) {
  switch (letter) {
    case 'R': return Arch::R;
    case 'V': return Arch::V;
    default:
      throw ParseError(std::string("unknown architecture letter '") + letter +
                       "'");
  }
}

Vocab vocab_from_pairs(const std::vector<synthdata::ImageTextPair>& pairs) {
  std::vector<std::string> words;
  for (const auto& p : pairs) {
    for (const auto& cap : p.captions) {
      words.insert(words.end(), cap.begin(), cap.end());
    }
  }
  return Vocab::from_corpus_tokens(words);
}

CaptionModel build_model(Arch arch, const Vocab& vocab, std::uint64_t seed,
                         int img_h, int img_w, int img_c) {
  if (vocab.size() <= 4) {
    throw Error("captioner vocabulary has no corpus tokens");
  }
  const ArchSpec spec = arch_spec(arch);
  const int shrink = 1 << static_cast<int>(spec.channels.size());
  if (img_h % shrink != 0 || img_w % shrink != 0) {
    throw Error("image size must be divisible by " + std::to_string(shrink) +
                " for arch " + std::string(1, arch_letter(arch)));
  }

  CaptionModel m;
  m.arch = arch;
  m.vocab = vocab;
  m.img_h = img_h;
  m.img_w = img_w;
  m.img_c = img_c;

  int h = img_h, w = img_w, cin = img_c;
  for (std::size_t b = 0; b < spec.channels.size(); ++b) {
    EncoderLayout::Block blk;
    blk.cin = cin;
    blk.cout = spec.channels[b];
    blk.h = h;
    blk.w = w;
    const std::string tag = "enc.conv" + std::to_string(b);
    blk.W = m.params.add(tag + ".W", {blk.cout, blk.cin, 3, 3});
    blk.b = m.params.add(tag + ".b", {blk.cout});
    m.enc.blocks.push_back(blk);
    cin = blk.cout;
    h /= 2;
    w /= 2;
  }
  m.enc.flat = cin * h * w;
  m.enc.embed_dim = spec.embed_dim;
  m.enc.fc_W = m.params.add("enc.fc.W", {m.enc.embed_dim, m.enc.flat});
  m.enc.fc_b = m.params.add("enc.fc.b", {m.enc.embed_dim});
  m.enc.h0_W = m.params.add("enc.h0.W", {kHidden, m.enc.embed_dim});
  m.enc.h0_b = m.params.add("enc.h0.b", {kHidden});
  m.enc.cond_dim = kCondDim;
  m.enc.cond_W = m.params.add("enc.cond.W", {kCondDim, m.enc.embed_dim});
  m.enc.cond_b = m.params.add("enc.cond.b", {kCondDim});

  m.dec.tok_dim = kTokDim;
  m.dec.hidden = kHidden;
  m.dec.tok_embed = m.params.add("dec.embed", {vocab.size(), kTokDim});
  m.dec.gru = nn::add_gru(m.params, "dec.gru", kTokDim + kCondDim, kHidden);
  // Output layer reads [hidden; conditioning] so image features reach the
  // logits through a single linear map.
  m.dec.out_W = m.params.add("dec.out.W", {vocab.size(), kHidden + kCondDim});
  m.dec.out_b = m.params.add("dec.out.b", {vocab.size()});

  Rng rng(mix_seed(seed, 0xcab));
  m.params.init(rng);
  return m;
}

double loss_and_grad(const CaptionModel& model,
                     std::span<const synthdata::ImageTextPair> batch,
                     nn::Vec& grad) {
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (const auto& pair : batch) {
    loss += sample_loss(model, pair, &grad, inv_batch);
  }
  return loss * inv_batch;
}

std::vector<double> train(CaptionModel& model,
                          const std::vector<synthdata::ImageTextPair>& pairs,
                          const TrainConfig& cfg) {
  if (pairs.empty()) {
    throw Error("train called with no pairs");
  }
  const std::size_t P = model.params.size();
  Rng order_rng(mix_seed(cfg.seed, 0x07de7));
  std::optional<Rng> dp_rng;
  if (cfg.dp) dp_rng.emplace(cfg.dp->seed);

  std::vector<int> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> history;
  history.reserve(cfg.epochs);
  nn::Vec grad(P);
  nn::Vec velocity(P, 0.0);
  std::vector<nn::Vec> sample_grads;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr =
        cfg.epochs > 1
            ? cfg.learning_rate *
                  std::pow(cfg.lr_decay, static_cast<double>(epoch) /
                                             static_cast<double>(cfg.epochs - 1))
            : cfg.learning_rate;
    order_rng.shuffle(order);
    double epoch_loss = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const int bsz = static_cast<int>(stop - start);
      double batch_loss = 0.0;

      // Materialize the (possibly augmented) batch.
      std::vector<synthdata::ImageTextPair> batch;
      batch.reserve(bsz);
      for (std::size_t k = start; k < stop; ++k) {
        const auto& p = pairs[static_cast<std::size_t>(order[k])];
        if (cfg.augment) {
          batch.push_back(defenses::augment(
              p, mix_seed(cfg.seed, 0xa06 + static_cast<std::uint64_t>(epoch),
                          static_cast<std::uint64_t>(order[k]))));
        } else {
          batch.push_back(p);
        }
      }

      if (cfg.dp) {
        sample_grads.assign(bsz, nn::Vec(P, 0.0));
        for (int i = 0; i < bsz; ++i) {
          batch_loss += sample_loss(model, batch[static_cast<std::size_t>(i)],
                                    &sample_grads[static_cast<std::size_t>(i)],
                                    1.0) /
                        bsz;
        }
        grad = defenses::dp_sgd_step(sample_grads, *cfg.dp, *dp_rng);
      } else {
        std::fill(grad.begin(), grad.end(), 0.0);
        batch_loss = loss_and_grad(model, batch, grad);
      }

      if (cfg.weight_decay > 0.0) {
        batch_loss += defenses::l2_penalty(model.params.values, cfg.weight_decay);
        for (std::size_t i = 0; i < P; ++i) {
          grad[i] += 2.0 * cfg.weight_decay * model.params.values[i];
        }
      }

      if (!std::isfinite(batch_loss)) {
        throw DivergenceError("training loss became non-finite at epoch " +
                              std::to_string(epoch));
      }
      if (cfg.grad_clip > 0.0) {
        const double norm = nn::l2_norm(grad);
        if (norm > cfg.grad_clip) {
          const double s = cfg.grad_clip / norm;
          for (double& g : grad) g *= s;
        }
      }
      for (std::size_t i = 0; i < P; ++i) {
        velocity[i] = cfg.momentum * velocity[i] + grad[i];
        model.params.values[i] -= lr * velocity[i];
      }
      epoch_loss += batch_loss;
      ++batches;
    }
    history.push_back(epoch_loss / batches);
  }
  model.trained_epochs += cfg.epochs;
  return history;
}

textsim::TokenSeq caption(const CaptionModel& model,
                          const synthdata::ImageTensor& image, int max_len) {
  if (model.trained_epochs == 0) {
    std::fprintf(stderr, "warning: captioning with an untrained model\n");
  }
  const auto& P = model.params.values;
  EncoderCache enc;
  encoder_fwd(model, image.pixels.data(), enc);

  const int V = model.vocab.size();
  textsim::TokenSeq out;
  nn::Vec h = enc.h0;
  nn::Vec h_next(kHidden);
  nn::Vec logits(V);
  nn::Vec x(model.dec.tok_dim + model.enc.cond_dim);
  nn::Vec out_x(kHidden + model.enc.cond_dim);
  std::copy(enc.cond.begin(), enc.cond.end(), x.begin() + model.dec.tok_dim);
  std::copy(enc.cond.begin(), enc.cond.end(), out_x.begin() + kHidden);
  int prev = Vocab::kBos;
  for (int t = 0; t < max_len; ++t) {
    const double* e = P.data() + model.dec.tok_embed +
                      static_cast<std::size_t>(prev) * model.dec.tok_dim;
    std::copy(e, e + model.dec.tok_dim, x.begin());
    nn::gru_fwd(P, model.dec.gru, x.data(), h.data(), h_next.data(), nullptr);
    std::swap(h, h_next);
    std::copy(h.begin(), h.end(), out_x.begin());
    nn::linear_fwd(P.data() + model.dec.out_W, P.data() + model.dec.out_b,
                   out_x.data(), logits.data(), V,
                   kHidden + model.enc.cond_dim);
    // Only EOS among the specials is decodable.
    logits[Vocab::kPad] = logits[Vocab::kBos] = logits[Vocab::kUnk] =
        -std::numeric_limits<double>::infinity();
    int best = 0;
    for (int i = 1; i < V; ++i) {
      if (logits[i] > logits[best]) best = i;
    }
    if (best == Vocab::kEos) break;
    out.push_back(model.vocab.token(best));
    prev = best;
  }
  return out;
}

void save_checkpoint(const CaptionModel& model,
                     const std::filesystem::path& path) {
  checkpoint::Header h;
  h.kind = "captioner";
  h.arch = arch_letter(model.arch);
  h.vocab = model.vocab.tokens();
  h.meta = {{"img_h", model.img_h},
            {"img_w", model.img_w},
            {"img_c", model.img_c},
            {"trained_epochs", model.trained_epochs}};
  h.tensors = model.params.tensors;
  checkpoint::save(path, h, model.params.values);
}

CaptionModel load_checkpoint(const std::filesystem::path& path,
                             std::optional<Arch> expect) {
  auto [h, values] = checkpoint::load(path);
  if (h.kind != "captioner") {
    throw CheckpointError("checkpoint " + path.string() + " holds a " + h.kind +
                          ", not a captioner");
  }
  Arch arch;
  try {
    arch = arch_from_letter(h.arch);
  } catch (const ParseError&) {
    throw CheckpointError("checkpoint " + path.string() +
                          " has an unknown architecture letter");
  }
  if (expect && *expect != arch) {
    throw CheckpointError(
        "checkpoint " + path.string() + " holds arch " +
        std::string(1, h.arch) + " but arch " +
        std::string(1, arch_letter(*expect)) + " was required");
  }
  CaptionModel m = build_model(arch, Vocab(h.vocab), 0,
                               static_cast<int>(h.meta.at("img_h")),
                               static_cast<int>(h.meta.at("img_w")),
                               static_cast<int>(h.meta.at("img_c")));
  if (m.params.tensors.size() != h.tensors.size()) {
    throw CheckpointError("checkpoint " + path.string() +
                          " tensor list does not match the architecture");
  }
  for (std::size_t i = 0; i < h.tensors.size(); ++i) {
    if (h.tensors[i].name != m.params.tensors[i].name ||
        h.tensors[i].dims != m.params.tensors[i].dims) {
      throw CheckpointError("checkpoint " + path.string() +
                            " shape mismatch on " + h.tensors[i].name);
    }
  }
  m.params.values = std::move(values);
  m.trained_epochs = static_cast<int>(h.meta.at("trained_epochs"));
  return m;
}

}  // namespace mmia::captioner
