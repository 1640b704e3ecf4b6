#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "mmia/errors.hpp"
#include "mmia/synthdata.hpp"

namespace fs = std::filesystem;
using namespace mmia::synthdata;

namespace {

std::set<std::string> id_set(const std::vector<ImageTextPair>& v) {
  std::set<std::string> s;
  for (const auto& p : v) s.insert(p.id);
  return s;
}

bool equal_corpora(const std::vector<ImageTextPair>& a,
                   const std::vector<ImageTextPair>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].id != b[i].id || a[i].captions != b[i].captions ||
        a[i].image.pixels != b[i].image.pixels) {
      return false;
    }
  }
  return true;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mmia_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("generation is deterministic and seed-sensitive") {
  const CorpusSpec spec{Family::C, 100, 7};
  const auto a = generate_corpus(spec);
  const auto b = generate_corpus(spec);
  CHECK(a.size() == 100);
  CHECK(equal_corpora(a, b));

  const auto c = generate_corpus({Family::C, 100, 8});
  CHECK(id_set(a) != id_set(c));
}

TEST_CASE("size below minimum is rejected") {
  CHECK_THROWS_AS(generate_corpus({Family::C, 19, 1}), mmia::SpecTooSmallError);
}

TEST_CASE("captions stay inside the family vocabulary") {
  const auto vocab_f = family_vocabulary(Family::F);
  const std::set<std::string> vf(vocab_f.begin(), vocab_f.end());
  for (const auto& pair : generate_corpus({Family::F, 50, 1})) {
    for (const auto& cap : pair.captions) {
      CHECK(cap.size() >= 5);
      CHECK(cap.size() <= 9);
      for (const auto& tok : cap) CHECK(vf.count(tok) == 1);
    }
  }
}

TEST_CASE("family vocabularies are pairwise disjoint") {
  const auto vc = family_vocabulary(Family::C);
  const auto vf = family_vocabulary(Family::F);
  const auto vi = family_vocabulary(Family::I);
  const std::set<std::string> sc(vc.begin(), vc.end());
  const std::set<std::string> sf(vf.begin(), vf.end());
  const std::set<std::string> si(vi.begin(), vi.end());
  CHECK(sc.size() == vc.size());
  CHECK(sf.size() == vf.size());
  CHECK(si.size() == vi.size());
  for (const auto& t : sc) {
    CHECK(sf.count(t) == 0);
    CHECK(si.count(t) == 0);
  }
  for (const auto& t : sf) CHECK(si.count(t) == 0);
}

TEST_CASE("images are valid tensors in [0,1]") {
  for (const auto& pair : generate_corpus({Family::I, 30, 3})) {
    CHECK(pair.image.h == 32);
    CHECK(pair.image.w == 32);
    CHECK(pair.image.c == 3);
    CHECK(pair.image.pixels.size() == 32u * 32u * 3u);
    for (double v : pair.image.pixels) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("split sizes, disjointness, determinism") {
  const auto corpus = generate_corpus({Family::C, 100, 11});
  const auto bundle = split_corpus(corpus, 20, 20, 5);
  CHECK(bundle.member.size() == 20);
  CHECK(bundle.nonmember.size() == 20);
  CHECK(bundle.shadow_member.size() == 20);
  CHECK(bundle.shadow_nonmember.size() == 20);
  CHECK(bundle.public_pairs.size() == 20);

  // Pairwise disjoint by id.
  std::set<std::string> all;
  for (const auto* part : {&bundle.member, &bundle.nonmember,
                           &bundle.shadow_member, &bundle.shadow_nonmember,
                           &bundle.public_pairs}) {
    for (const auto& p : *part) CHECK(all.insert(p.id).second);
  }
  CHECK(all.size() == 100);

  const auto again = split_corpus(corpus, 20, 20, 5);
  CHECK(id_set(again.member) == id_set(bundle.member));
  CHECK(id_set(again.public_pairs) == id_set(bundle.public_pairs));

  CHECK_THROWS_AS(split_corpus(generate_corpus({Family::C, 50, 11}), 20, 20, 5),
                  mmia::InsufficientDataError);
}

TEST_CASE("save then load round-trips exactly") {
  const auto dir = fresh_dir("roundtrip");
  const auto corpus = generate_corpus({Family::F, 25, 9});
  save_corpus(corpus, dir);
  const auto loaded = load_corpus(dir);
  CHECK(equal_corpora(corpus, loaded));
  fs::remove_all(dir);
}

TEST_CASE("corrupt corpora raise FormatError") {
  // Empty directory: no manifest.
  const auto empty = fresh_dir("empty");
  CHECK_THROWS_AS(load_corpus(empty), mmia::FormatError);
  fs::remove_all(empty);

  // Truncated image file.
  const auto dir = fresh_dir("truncated");
  const auto corpus = generate_corpus({Family::C, 21, 2});
  save_corpus(corpus, dir);
  const fs::path victim = dir / ("images/" + corpus[3].id + ".f32");
  fs::resize_file(victim, 16);
  try {
    load_corpus(dir);
    CHECK(false);
  } catch (const mmia::FormatError& e) {
    CHECK(std::string(e.what()).find(corpus[3].id) != std::string::npos);
  }

  // Record with missing fields.
  std::ofstream(dir / "manifest.tsv", std::ios::app) << "orphan\n";
  // Restore the truncated file first so the orphan line is what trips.
  save_corpus(corpus, dir);
  std::ofstream(dir / "manifest.tsv", std::ios::app) << "orphan\n";
  CHECK_THROWS_AS(load_corpus(dir), mmia::FormatError);
  fs::remove_all(dir);
}

TEST_CASE("caption attributes match the rendered image") {
  // Re-parse each caption, re-derive the attributes, and check the pixels:
  // the background color shows at the corner, and every named shape color
  // covers at least five pixels.
  auto near = [](double a, double b) { return std::abs(a - b) <= 0.05; };
  for (Family fam : {Family::C, Family::F, Family::I}) {
    for (const auto& pair : generate_corpus({fam, 40, 17})) {
      const auto attrs = parse_caption(fam, pair.captions.front());
      const auto& img = pair.image;

      const Rgb bg = background_rgb(fam, attrs.background);
      CHECK(near(img.at(0, 0, 0), bg.r));
      CHECK(near(img.at(1, 0, 0), bg.g));
      CHECK(near(img.at(2, 0, 0), bg.b));

      for (int s = 0; s < attrs.n_shapes; ++s) {
        const Rgb col = color_rgb(fam, attrs.color[s]);
        int hits = 0;
        for (int y = 0; y < img.h; ++y) {
          for (int x = 0; x < img.w; ++x) {
            if (near(img.at(0, y, x), col.r) && near(img.at(1, y, x), col.g) &&
                near(img.at(2, y, x), col.b)) {
              ++hits;
            }
          }
        }
        CHECK(hits >= 5);
      }
    }
  }
}
