#include "mmia/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "mmia/errors.hpp"
#include "mmia/rng.hpp"

namespace mmia::synthdata {

namespace {

// Per-family lexicon: three glue words (opening word, relation word,
// background preposition) and 3x3 synonym tables for shapes, colors, and
// backgrounds. All 90 tokens are pairwise distinct across families.
struct Lexicon {
  std::array<std::string, 3> glue;
  std::array<std::array<std::string, 3>, 3> shapes;
  std::array<std::array<std::string, 3>, 3> colors;
  std::array<std::array<std::string, 3>, 3> backgrounds;
  std::array<Rgb, 3> color_rgb;
  std::array<Rgb, 3> background_rgb;
};

const Lexicon& lexicon(Family f) {
  static const Lexicon c{
      {"a", "above", "on"},
      {{{"circle", "disc", "dot"},
        {"square", "box", "block"},
        {"triangle", "wedge", "pyramid"}}},
      {{{"red", "ruby", "cherry"},
        {"green", "lime", "moss"},
        {"blue", "azure", "cobalt"}}},
      {{{"gray", "ash", "smoke"},
        {"white", "snow", "chalk"},
        {"black", "coal", "ink"}}},
      {{{0.85, 0.10, 0.10}, {0.10, 0.75, 0.15}, {0.12, 0.20, 0.85}}},
      {{{0.50, 0.50, 0.50}, {0.92, 0.92, 0.92}, {0.06, 0.06, 0.06}}}};
  static const Lexicon fl{
      {"the", "beside", "over"},
      {{{"diamond", "rhombus", "kite"},
        {"cross", "plus", "mark"},
        {"ring", "loop", "hoop"}}},
      {{{"amber", "gold", "honey"},
        {"violet", "plum", "lilac"},
        {"teal", "cyan", "aqua"}}},
      {{{"sand", "dune", "beige"},
        {"slate", "stone", "pebble"},
        {"ivory", "cream", "linen"}}},
      {{{0.95, 0.65, 0.10}, {0.55, 0.15, 0.75}, {0.05, 0.60, 0.60}}},
      {{{0.80, 0.70, 0.50}, {0.35, 0.40, 0.45}, {0.95, 0.93, 0.85}}}};
  static const Lexicon i{
      {"one", "near", "upon"},
      {{{"star", "spark", "burst"},
        {"hexagon", "hex", "cell"},
        {"arrow", "dart", "bolt"}}},
      {{{"crimson", "rust", "brick"},
        {"olive", "fern", "sage"},
        {"navy", "midnight", "steel"}}},
      {{{"charcoal", "soot", "graphite"},
        {"pearl", "opal", "silver"},
        {"bronze", "copper", "brass"}}},
      {{{0.75, 0.05, 0.25}, {0.45, 0.50, 0.10}, {0.05, 0.10, 0.45}}},
      {{{0.15, 0.15, 0.18}, {0.88, 0.88, 0.92}, {0.70, 0.50, 0.25}}}};
  switch (f) {
    case Family::C: return c;
    case Family::F: return fl;
    default: return i;
  }
}

// Shape membership test; kind = family_index * 3 + shape_index.
bool inside_shape(int kind, double dx, double dy, double r) {
  const double ax = std::abs(dx);
  const double ay = std::abs(dy);
  switch (kind) {
    case 0: return dx * dx + dy * dy <= r * r;                    // circle
    case 1: return std::max(ax, ay) <= 0.85 * r;                  // square
    case 2: return dy >= -r && dy <= r && ax <= (dy + r) / 2.0;   // triangle
    case 3: return ax + ay <= r;                                  // diamond
    case 4:                                                       // cross
      return (ax <= 0.34 * r && ay <= r) || (ay <= 0.34 * r && ax <= r);
    case 5: {                                                     // ring
      const double d2 = dx * dx + dy * dy;
      return d2 >= 0.25 * r * r && d2 <= r * r;
    }
    case 6:                                                       // star
      return ax * ay <= 0.09 * r * r && std::max(ax, ay) <= r;
    case 7:                                                       // hexagon
      return ax <= 0.87 * r && 0.5 * ax + 0.87 * ay <= 0.87 * r;
    default:                                                      // arrow
      return (dx >= 0 && dx <= r && ay <= 0.5 * (r - dx)) ||
             (dx >= -r && dx <= 0 && ay <= 0.25 * r);
  }
}

struct ShapeDraw {
  int kind;
  Rgb color;
  double cx, cy, r;
};

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Snap to float32 so on-disk float blobs round-trip exactly.
double quantize(double v) { return static_cast<double>(static_cast<float>(v)); }

// Smooth per-image field: two low-frequency sinusoids with random
// orientation, frequency, and phase. Survives average pooling, so a small
// conv encoder can tell corpus samples apart, which is what lets a target
// model overfit individual training pairs.
struct Fingerprint {
  double kx1, ky1, ph1, amp1;
  double kx2, ky2, ph2;
  Rgb amp2;

  static Fingerprint draw(Rng& rng, int n) {
    Fingerprint f;
    const double tau = 2.0 * M_PI;
    auto freq = [&] { return rng.uniform(0.5, 2.0) * tau / n; };
    const double a1 = rng.uniform(0.0, tau);
    const double f1 = freq();
    f.kx1 = f1 * std::cos(a1);
    f.ky1 = f1 * std::sin(a1);
    f.ph1 = rng.uniform(0.0, tau);
    f.amp1 = rng.uniform(0.08, 0.15);
    const double a2 = rng.uniform(0.0, tau);
    const double f2 = freq();
    f.kx2 = f2 * std::cos(a2);
    f.ky2 = f2 * std::sin(a2);
    f.ph2 = rng.uniform(0.0, tau);
    f.amp2 = {rng.uniform(-0.15, 0.15), rng.uniform(-0.15, 0.15),
              rng.uniform(-0.15, 0.15)};
    return f;
  }

  Rgb at(int x, int y) const {
    const double luma = amp1 * std::sin(kx1 * x + ky1 * y + ph1);
    const double chroma = std::sin(kx2 * x + ky2 * y + ph2);
    return {luma + amp2.r * chroma, luma + amp2.g * chroma,
            luma + amp2.b * chroma};
  }
};

ImageTensor render(int n, const Rgb& bg, const std::vector<ShapeDraw>& shapes,
                   Rng& rng) {
  ImageTensor img;
  img.h = img.w = n;
  img.c = 3;
  img.pixels.assign(static_cast<std::size_t>(3) * n * n, 0.0);
  const Fingerprint fp = Fingerprint::draw(rng, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      Rgb px = bg;
      for (const auto& s : shapes) {
        if (inside_shape(s.kind, x - s.cx, y - s.cy, s.r)) px = s.color;
      }
      const Rgb field = fp.at(x, y);
      const double noise = rng.uniform(-0.02, 0.02);
      img.at(0, y, x) = quantize(clamp01(px.r + field.r + noise));
      img.at(1, y, x) = quantize(clamp01(px.g + field.g + noise));
      img.at(2, y, x) = quantize(clamp01(px.b + field.b + noise));
    }
  }
  return img;
}

std::string make_id(Family f, int index, Rng& rng) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%c%04d-%08x", family_letter(f), index,
                static_cast<unsigned>(rng.next_u64() & 0xffffffffu));
  return buf;
}

}  // namespace

char family_letter(Family f) {
  switch (f) {
    case Family::C: return 'C';
    case Family::F: return 'F';
    default: return 'I';
  }
}

Family family_from_letter(char letter) {
  switch (letter) {
    case 'C': return Family::C;
    case 'F': return Family::F;
    case 'I': return Family::I;
    default:
      throw ParseError(std::string("unknown dataset family letter '") + letter +
                       "'");
  }
}

std::vector<std::string> family_vocabulary(Family f) {
  const Lexicon& lex = lexicon(f);
  std::vector<std::string> vocab(lex.glue.begin(), lex.glue.end());
  for (const auto& table : {lex.shapes, lex.colors, lex.backgrounds}) {
    for (const auto& row : table) {
      vocab.insert(vocab.end(), row.begin(), row.end());
    }
  }
  return vocab;
}

CaptionAttrs parse_caption(Family f, const textsim::TokenSeq& caption) {
  const Lexicon& lex = lexicon(f);
  auto find = [](const std::array<std::array<std::string, 3>, 3>& table,
                 const std::string& tok) {
    for (int i = 0; i < 3; ++i) {
      for (int s = 0; s < 3; ++s) {
        if (table[i][s] == tok) return i;
      }
    }
    return -1;
  };

  CaptionAttrs attrs;
  if (caption.size() != 5 && caption.size() != 9) {
    throw FormatError("caption length does not match any template");
  }
  attrs.n_shapes = caption.size() == 5 ? 1 : 2;
  auto expect = [&](std::size_t pos, const std::string& want) {
    if (caption[pos] != want) {
      throw FormatError("unexpected token \"" + caption[pos] + "\" at position " +
                        std::to_string(pos));
    }
  };
  auto read_shape = [&](std::size_t pos, int slot) {
    attrs.color[slot] = find(lex.colors, caption[pos]);
    attrs.shape[slot] = find(lex.shapes, caption[pos + 1]);
    if (attrs.color[slot] < 0 || attrs.shape[slot] < 0) {
      throw FormatError("unknown attribute near position " + std::to_string(pos));
    }
  };
  expect(0, lex.glue[0]);
  read_shape(1, 0);
  std::size_t pos = 3;
  if (attrs.n_shapes == 2) {
    expect(3, lex.glue[1]);
    expect(4, lex.glue[0]);
    read_shape(5, 1);
    pos = 7;
  }
  expect(pos, lex.glue[2]);
  attrs.background = find(lex.backgrounds, caption[pos + 1]);
  if (attrs.background < 0) {
    throw FormatError("unknown background token \"" + caption[pos + 1] + "\"");
  }
  return attrs;
}

Rgb color_rgb(Family f, int index) { return lexicon(f).color_rgb.at(index); }

Rgb background_rgb(Family f, int index) {
  return lexicon(f).background_rgb.at(index);
}

std::vector<ImageTextPair> generate_corpus(const CorpusSpec& spec) {
  if (spec.size < 20) {
    throw SpecTooSmallError("corpus size " + std::to_string(spec.size) +
                            " < 20");
  }
  const Lexicon& lex = lexicon(spec.family);
  const int fam = static_cast<int>(spec.family);
  const int n = spec.image_size;
  // Layout boxes for the two-shape relation; the first shape sits in the
  // low-coordinate box, the second in the high one, so the relation word
  // (above / beside / near) is true in the render.
  const double lo_min = 0.25 * n, lo_max = 0.34 * n;
  const double hi_min = 0.66 * n, hi_max = 0.75 * n;
  const double mid_min = 0.31 * n, mid_max = 0.66 * n;

  std::vector<ImageTextPair> corpus;
  corpus.reserve(spec.size);
  for (int i = 0; i < spec.size; ++i) {
    Rng rng(mix_seed(spec.seed, 0x5155, static_cast<std::uint64_t>(i)));
    ImageTextPair pair;
    pair.id = make_id(spec.family, i, rng);

    const int n_shapes = rng.bernoulli(0.5) ? 2 : 1;
    const int bg_idx = rng.uniform_int(3);
    const int bg_syn = rng.uniform_int(3);

    std::vector<ShapeDraw> draws;
    textsim::TokenSeq caption;
    const double r_lo = 0.09 * n, r_hi = 0.16 * n;
    for (int s = 0; s < n_shapes; ++s) {
      const int shape_idx = rng.uniform_int(3);
      const int color_idx = rng.uniform_int(3);
      const int shape_syn = rng.uniform_int(3);
      const int color_syn = rng.uniform_int(3);
      ShapeDraw d;
      d.kind = fam * 3 + shape_idx;
      d.color = lex.color_rgb[color_idx];
      d.r = rng.uniform(r_lo, r_hi);
      if (n_shapes == 1) {
        d.cx = rng.uniform(mid_min, mid_max);
        d.cy = rng.uniform(mid_min, mid_max);
      } else if (spec.family == Family::C) {  // "above": first on top
        d.cx = rng.uniform(mid_min, mid_max);
        d.cy = s == 0 ? rng.uniform(lo_min, lo_max) : rng.uniform(hi_min, hi_max);
      } else if (spec.family == Family::F) {  // "beside": first on the left
        d.cx = s == 0 ? rng.uniform(lo_min, lo_max) : rng.uniform(hi_min, hi_max);
        d.cy = rng.uniform(mid_min, mid_max);
      } else {  // "near": first top-left, second bottom-right
        d.cx = s == 0 ? rng.uniform(lo_min, lo_max) : rng.uniform(hi_min, hi_max);
        d.cy = s == 0 ? rng.uniform(lo_min, lo_max) : rng.uniform(hi_min, hi_max);
      }
      draws.push_back(d);

      if (s == 1) caption.push_back(lex.glue[1]);
      if (s == 1 || s == 0) caption.push_back(lex.glue[0]);
      caption.push_back(lex.colors[color_idx][color_syn]);
      caption.push_back(lex.shapes[shape_idx][shape_syn]);
    }
    caption.push_back(lex.glue[2]);
    caption.push_back(lex.backgrounds[bg_idx][bg_syn]);

    pair.image = render(n, lex.background_rgb[bg_idx], draws, rng);
    pair.captions.push_back(std::move(caption));
    corpus.push_back(std::move(pair));
  }
  return corpus;
}

DatasetBundle split_corpus(const std::vector<ImageTextPair>& corpus,
                           int n_member, int n_shadow, std::uint64_t seed) {
  const std::size_t needed =
      2 * static_cast<std::size_t>(n_member) + 2 * static_cast<std::size_t>(n_shadow);
  if (corpus.size() < needed) {
    throw InsufficientDataError(
        "corpus of " + std::to_string(corpus.size()) + " pairs cannot supply " +
        std::to_string(needed) + " member/shadow samples");
  }
  std::vector<int> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(seed, 0x59171));
  rng.shuffle(order);

  DatasetBundle bundle;
  std::size_t pos = 0;
  auto take = [&](std::vector<ImageTextPair>& out, std::size_t count) {
    for (std::size_t k = 0; k < count; ++k) {
      out.push_back(corpus[order[pos++]]);
    }
  };
  take(bundle.member, n_member);
  take(bundle.nonmember, n_member);
  take(bundle.shadow_member, n_shadow);
  take(bundle.shadow_nonmember, n_shadow);
  take(bundle.public_pairs, corpus.size() - pos);
  return bundle;
}

void save_corpus(const std::vector<ImageTextPair>& corpus,
                 const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "images");
  std::ofstream manifest(dir / "manifest.tsv");
  if (!manifest) {
    throw FormatError("cannot write manifest at " + (dir / "manifest.tsv").string());
  }
  int h = 0, w = 0, c = 0;
  if (!corpus.empty()) {
    h = corpus.front().image.h;
    w = corpus.front().image.w;
    c = corpus.front().image.c;
  }
  manifest << "#mmia-corpus\tv1\t" << h << "x" << w << "x" << c << "\n";
  for (const auto& pair : corpus) {
    const std::string rel = "images/" + pair.id + ".f32";
    manifest << pair.id << "\t" << rel;
    for (const auto& cap : pair.captions) {
      manifest << "\t";
      for (std::size_t t = 0; t < cap.size(); ++t) {
        if (t) manifest << ' ';
        manifest << cap[t];
      }
    }
    manifest << "\n";

    std::ofstream img(dir / rel, std::ios::binary);
    std::vector<float> buf(pair.image.pixels.begin(), pair.image.pixels.end());
    img.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
}

std::vector<ImageTextPair> load_corpus(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::ifstream manifest(dir / "manifest.tsv");
  if (!manifest) {
    throw FormatError("no manifest.tsv under " + dir.string());
  }
  std::string header;
  std::getline(manifest, header);
  int h = 0, w = 0, c = 0;
  {
    std::istringstream hs(header);
    std::string tag, version, dims;
    std::getline(hs, tag, '\t');
    std::getline(hs, version, '\t');
    std::getline(hs, dims, '\t');
    if (tag != "#mmia-corpus" || version != "v1" ||
        std::sscanf(dims.c_str(), "%dx%dx%d", &h, &w, &c) != 3) {
      throw FormatError("bad corpus manifest header: \"" + header + "\"");
    }
  }
  std::vector<ImageTextPair> corpus;
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream ls(line);
    std::string field;
    while (std::getline(ls, field, '\t')) fields.push_back(field);
    if (fields.size() < 3) {
      throw FormatError("corpus record needs id, image, caption: \"" +
                        (fields.empty() ? line : fields[0]) + "\"");
    }
    ImageTextPair pair;
    pair.id = fields[0];
    for (std::size_t k = 2; k < fields.size(); ++k) {
      pair.captions.push_back(textsim::tokenize(fields[k]));
    }

    const fs::path img_path = dir / fields[1];
    std::ifstream img(img_path, std::ios::binary);
    if (!img) {
      throw FormatError("missing image file for record " + pair.id);
    }
    const std::size_t count = static_cast<std::size_t>(h) * w * c;
    std::vector<float> buf(count);
    img.read(reinterpret_cast<char*>(buf.data()),
             static_cast<std::streamsize>(count * sizeof(float)));
    if (static_cast<std::size_t>(img.gcount()) != count * sizeof(float)) {
      throw FormatError("truncated image file for record " + pair.id);
    }
    pair.image.h = h;
    pair.image.w = w;
    pair.image.c = c;
    pair.image.pixels.assign(buf.begin(), buf.end());
    corpus.push_back(std::move(pair));
  }
  return corpus;
}

}  // namespace mmia::synthdata
