#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mmia/nn.hpp"

namespace mmia::checkpoint {

// Self-describing model container: header (kind, arch letter, vocab + hash,
// integer metadata, tensor shapes, format version) followed by the raw
// little-endian float32 parameter blobs in tensor order.
struct Header {
  std::string kind;                 // "captioner" | "mfe" | "attack_mlp"
  char arch = '-';
  std::vector<std::string> vocab;   // empty when the model has none
  std::map<std::string, std::int64_t> meta;
  std::vector<nn::TensorSpec> tensors;
};

constexpr std::uint32_t kFormatVersion = 1;

void save(const std::filesystem::path& path, const Header& header,
          const nn::Vec& values);

// Throws CheckpointError on bad magic, version, truncation, or shape
// mismatches between the header and the payload.
std::pair<Header, nn::Vec> load(const std::filesystem::path& path);

}  // namespace mmia::checkpoint
