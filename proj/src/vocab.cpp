#include "mmia/vocab.hpp"

#include <algorithm>
#include <set>

#include "mmia/errors.hpp"

namespace mmia {

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.size() < 4 || tokens_[kPad] != "<pad>" ||
      tokens_[kBos] != "<bos>" || tokens_[kEos] != "<eos>" ||
      tokens_[kUnk] != "<unk>") {
    throw Error("vocab must start with <pad> <bos> <eos> <unk>");
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw Error("duplicate vocab token \"" + tokens_[i] + "\"");
    }
  }
}

Vocab Vocab::from_corpus_tokens(const std::vector<std::string>& words) {
  if (words.empty()) {
    throw Error("cannot build a vocabulary from zero tokens");
  }
  std::set<std::string> uniq(words.begin(), words.end());
  std::vector<std::string> table = {"<pad>", "<bos>", "<eos>", "<unk>"};
  table.insert(table.end(), uniq.begin(), uniq.end());
  return Vocab(std::move(table));
}

int Vocab::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

std::uint64_t Vocab::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& t : tokens_) {
    for (char c : t) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ULL;
    }
    h ^= 0xff;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace mmia
