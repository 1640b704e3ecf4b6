#pragma once

#include <cstdint>
#include <vector>

#include "mmia/nn.hpp"
#include "mmia/rng.hpp"
#include "mmia/synthdata.hpp"

namespace mmia::defenses {

// Per-sample gradient clipping + Gaussian noise settings.
struct DpConfig {
  double clip_norm = 1.0;        // C > 0
  double noise_multiplier = 0.0; // sigma >= 0
  std::uint64_t seed = 0;
};

// Exact horizontal mirror; its own inverse.
synthdata::ImageTensor flip_horizontal(const synthdata::ImageTensor& image);

// Random horizontal flip (p = 0.5), brightness jitter of +/-10%, and a
// random translation of up to 2 pixels. Caption unchanged, pixels clamped
// to [0, 1]. Deterministic per seed.
synthdata::ImageTextPair augment(const synthdata::ImageTextPair& pair,
                                 std::uint64_t seed);

// lambda * sum of squared parameters.
double l2_penalty(const nn::Vec& params, double lambda);

// Rescale every per-sample gradient to norm <= C, average, then add
// N(0, (sigma * C / batch)^2) noise per coordinate from rng.
nn::Vec dp_sgd_step(const std::vector<nn::Vec>& per_sample_grads,
                    const DpConfig& dp, Rng& rng);

// Convenience overload matching the op signature: noise drawn from a fresh
// stream seeded with dp.seed.
nn::Vec dp_sgd_step(const std::vector<nn::Vec>& per_sample_grads,
                    const DpConfig& dp);

}  // namespace mmia::defenses
