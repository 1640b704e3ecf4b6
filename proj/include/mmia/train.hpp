#pragma once

#include <cstdint>
#include <optional>

#include "mmia/defenses.hpp"

namespace mmia {

// Shared training knobs. weight_decay, augment, and dp apply where the
// model supports them (the captioner supports all three).
struct TrainConfig {
  int epochs = 1;
  int batch_size = 32;
  double learning_rate = 0.05;
  double momentum = 0.9;       // classical momentum; deterministic per seed
  double lr_decay = 0.1;       // final lr as a fraction of the initial lr,
                               // reached by exponential schedule; 1 = fixed
  double grad_clip = 5.0;      // global-norm gradient clip, 0 = off
  double weight_decay = 0.0;   // l2 coefficient, 0 = off
  bool augment = false;
  std::optional<defenses::DpConfig> dp;
  std::uint64_t seed = 0;
};

}  // namespace mmia
