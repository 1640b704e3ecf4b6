#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace mmia {

// Token table shared by the captioner and the feature extractor. The four
// special tokens occupy fixed slots; corpus tokens follow in sorted order.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;

  Vocab() = default;
  // tokens: the full table including the four specials at the front.
  explicit Vocab(std::vector<std::string> tokens);

  static Vocab from_corpus_tokens(const std::vector<std::string>& words);

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(int id) const { return tokens_[id]; }
  int id(const std::string& token) const;  // kUnk when absent
  bool is_special(int id) const { return id < 4; }
  std::uint64_t hash() const;  // FNV-1a over tokens

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace mmia
