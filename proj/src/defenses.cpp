#include "mmia/defenses.hpp"

#include <algorithm>
#include <cmath>

#include "mmia/errors.hpp"

namespace mmia::defenses {

synthdata::ImageTensor flip_horizontal(const synthdata::ImageTensor& image) {
  synthdata::ImageTensor out = image;
  for (int c = 0; c < image.c; ++c) {
    for (int y = 0; y < image.h; ++y) {
      for (int x = 0; x < image.w; ++x) {
        out.at(c, y, x) = image.at(c, y, image.w - 1 - x);
      }
    }
  }
  return out;
}

synthdata::ImageTextPair augment(const synthdata::ImageTextPair& pair,
                                 std::uint64_t seed) {
  Rng rng(seed);
  synthdata::ImageTextPair out = pair;
  if (rng.bernoulli(0.5)) {
    out.image = flip_horizontal(out.image);
  }
  const double gain = 1.0 + rng.uniform(-0.10, 0.10);
  const int dx = rng.uniform_int(5) - 2;
  const int dy = rng.uniform_int(5) - 2;

  const synthdata::ImageTensor src = out.image;
  for (int c = 0; c < src.c; ++c) {
    for (int y = 0; y < src.h; ++y) {
      for (int x = 0; x < src.w; ++x) {
        const int sy = y - dy;
        const int sx = x - dx;
        const double v =
            (sy >= 0 && sy < src.h && sx >= 0 && sx < src.w) ? src.at(c, sy, sx)
                                                             : 0.0;
        out.image.at(c, y, x) = std::clamp(v * gain, 0.0, 1.0);
      }
    }
  }
  return out;
}

double l2_penalty(const nn::Vec& params, double lambda) {
  double s = 0.0;
  for (double p : params) s += p * p;
  return lambda * s;
}

nn::Vec dp_sgd_step(const std::vector<nn::Vec>& per_sample_grads,
                    const DpConfig& dp, Rng& rng) {
  if (per_sample_grads.empty()) {
    throw Error("dp_sgd_step needs at least one per-sample gradient");
  }
  const std::size_t dim = per_sample_grads.front().size();
  const double batch = static_cast<double>(per_sample_grads.size());
  nn::Vec mean(dim, 0.0);
  for (const auto& g : per_sample_grads) {
    const double norm = nn::l2_norm(g);
    const double scale =
        norm > dp.clip_norm ? dp.clip_norm / norm : 1.0;
    for (std::size_t i = 0; i < dim; ++i) mean[i] += scale * g[i];
  }
  for (double& v : mean) v /= batch;
  if (dp.noise_multiplier > 0.0) {
    const double stddev = dp.noise_multiplier * dp.clip_norm / batch;
    for (double& v : mean) v += stddev * rng.normal();
  }
  return mean;
}

nn::Vec dp_sgd_step(const std::vector<nn::Vec>& per_sample_grads,
                    const DpConfig& dp) {
  Rng rng(dp.seed);
  return dp_sgd_step(per_sample_grads, dp, rng);
}

}  // namespace mmia::defenses
