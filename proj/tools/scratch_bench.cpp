// Scratch experiment driver; not part of the shipped build.
#include <chrono>
#include <cstdio>
#include <map>
#include <string>

#include "mmia/captioner.hpp"
#include "mmia/nn.hpp"
#include "mmia/rng.hpp"
#include "mmia/synthdata.hpp"
#include "mmia/textsim.hpp"

using namespace mmia;
using Clock = std::chrono::steady_clock;

static double secs(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

int main(int argc, char** argv) {
  std::map<std::string, double> args = {
      {"n", 50},    {"img", 16},   {"epochs", 200}, {"lr", 0.01},
      {"batch", 32}, {"seed", 1},  {"arch", 0},     {"size", 300}};
  for (int i = 1; i + 1 < argc; i += 2) {
    args[argv[i]] = std::atof(argv[i + 1]);
  }
  const int n = static_cast<int>(args["n"]);
  const int img = static_cast<int>(args["img"]);

  synthdata::CorpusSpec spec{synthdata::Family::F,
                             std::max(20, static_cast<int>(args["size"])),
                             static_cast<std::uint64_t>(args["seed"]), img};
  auto corpus = synthdata::generate_corpus(spec);
  std::vector<synthdata::ImageTextPair> train_pairs(corpus.begin(),
                                                    corpus.begin() + n);
  std::vector<synthdata::ImageTextPair> held(corpus.begin() + n,
                                             corpus.begin() + std::min<std::size_t>(corpus.size(), n + 50));

  auto vocab = captioner::vocab_from_pairs(corpus);
  auto arch = args["arch"] == 0 ? captioner::Arch::R : captioner::Arch::V;
  auto model = captioner::build_model(arch, vocab, 7, img, img, 3);
  std::printf("params: %zu\n", model.params.size());

  TrainConfig cfg;
  cfg.epochs = static_cast<int>(args["epochs"]);
  cfg.batch_size = static_cast<int>(args["batch"]);
  cfg.learning_rate = args["lr"];
  cfg.seed = 99;

  if (args.count("gradcheck") && args["gradcheck"] > 0) {
    std::span<const synthdata::ImageTextPair> batch(train_pairs.data(), 2);
    nn::Vec grad(model.params.size(), 0.0);
    captioner::loss_and_grad(model, batch, grad);
    Rng rng(5);
    auto res = nn::check_gradients(
        model.params.values, grad,
        [&] {
          nn::Vec g;  // loss only
          g.assign(model.params.size(), 0.0);
          return captioner::loss_and_grad(model, batch, g);
        },
        100, 1e-5, 1e-4, rng);
    std::printf("gradcheck: %d/%d passed, worst rel %.3e\n", res.passed,
                res.checked, res.worst_rel);
    return 0;
  }

  const auto t0 = Clock::now();
  auto hist = captioner::train(model, train_pairs, cfg);
  const auto t1 = Clock::now();
  std::printf("train %.1fs  loss %.4f -> %.4f\n", secs(t0, t1), hist.front(),
              hist.back());
  for (std::size_t e = 0; e < hist.size(); e += 50) {
    std::printf("  epoch %4zu loss %.4f\n", e, hist[e]);
  }

  int exact = 0;
  double mean_rl_train = 0.0;
  for (std::size_t i = 0; i < train_pairs.size(); ++i) {
    const auto& p = train_pairs[i];
    auto cap = captioner::caption(model, p.image, 12);
    if (cap == p.captions.front()) ++exact;
    if (!cap.empty())
      mean_rl_train += textsim::rouge_l(cap, p.captions.front());
    if (i < 5) {
      std::string got, want;
      for (const auto& t : cap) got += t + " ";
      for (const auto& t : p.captions.front()) want += t + " ";
      std::printf("  train[%zu]\n    want: %s\n    got:  %s\n", i, want.c_str(),
                  got.c_str());
    }
  }
  double mean_rl_held = 0.0;
  int empty_held = 0;
  for (const auto& p : held) {
    auto cap = captioner::caption(model, p.image, 12);
    if (cap.empty()) { ++empty_held; continue; }
    mean_rl_held += textsim::rouge_l(cap, p.captions.front());
  }
  std::printf("train exact-match: %d/%d (%.0f%%)  mean rougeL train %.3f held %.3f (empty held: %d)\n",
              exact, n, 100.0 * exact / n, mean_rl_train / n,
              held.empty() ? 0.0 : mean_rl_held / (held.size() - empty_held),
              empty_held);
  return 0;
}
