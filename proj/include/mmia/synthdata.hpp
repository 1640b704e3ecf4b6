#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mmia/textsim.hpp"

namespace mmia::synthdata {

// H x W x C image, CHW layout, values in [0, 1]. Every pixel is exactly
// representable in float32 so corpora round-trip through disk bit-for-bit.
struct ImageTensor {
  int h = 0;
  int w = 0;
  int c = 0;
  std::vector<double> pixels;

  double& at(int ch, int y, int x) { return pixels[(ch * h + y) * w + x]; }
  double at(int ch, int y, int x) const { return pixels[(ch * h + y) * w + x]; }
  std::size_t size() const { return pixels.size(); }
};

struct ImageTextPair {
  std::string id;
  ImageTensor image;
  std::vector<textsim::TokenSeq> captions;  // >= 1
};

// Member / non-member / shadow-member / shadow-non-member / public split.
struct DatasetBundle {
  std::vector<ImageTextPair> member;
  std::vector<ImageTextPair> nonmember;
  std::vector<ImageTextPair> shadow_member;
  std::vector<ImageTextPair> shadow_nonmember;
  std::vector<ImageTextPair> public_pairs;
};

// Three synthetic distributions with disjoint caption vocabularies and
// distinct render layouts, so corpora are distributionally separable.
enum class Family { C, F, I };

char family_letter(Family f);
Family family_from_letter(char letter);  // throws ParseError

struct CorpusSpec {
  Family family = Family::C;
  int size = 2000;
  std::uint64_t seed = 0;
  int image_size = 32;  // H = W; C = 3
};

// Every token the family's caption templates can produce.
std::vector<std::string> family_vocabulary(Family f);

struct Rgb {
  double r = 0.0, g = 0.0, b = 0.0;
};

// Attributes named by a caption, resolved through the synonym tables.
struct CaptionAttrs {
  int n_shapes = 0;  // 1 or 2
  std::array<int, 2> shape{-1, -1};
  std::array<int, 2> color{-1, -1};
  int background = -1;
};

// Reverse of the caption templates; throws FormatError on a caption no
// template produces. Lets tests re-derive the render parameters.
CaptionAttrs parse_caption(Family f, const textsim::TokenSeq& caption);

Rgb color_rgb(Family f, int index);
Rgb background_rgb(Family f, int index);

// Deterministic per (family, size, seed, image_size). Each image renders one
// or two colored shapes on a background; the caption names the rendered
// attributes, with the wording drawn from per-attribute synonym sets.
// Throws SpecTooSmallError if spec.size < 20.
std::vector<ImageTextPair> generate_corpus(const CorpusSpec& spec);

// Disjoint random partition into n_member members, n_member non-members,
// n_shadow shadow members, n_shadow shadow non-members, remainder public.
// Throws InsufficientDataError if the corpus is too small.
DatasetBundle split_corpus(const std::vector<ImageTextPair>& corpus,
                           int n_member, int n_shadow, std::uint64_t seed);

// Corpus directory: manifest.tsv (id, image file, caption strings) plus one
// raw little-endian float32 file per image under images/.
void save_corpus(const std::vector<ImageTextPair>& corpus,
                 const std::filesystem::path& dir);
std::vector<ImageTextPair> load_corpus(const std::filesystem::path& dir);

}  // namespace mmia::synthdata
