#include "bioqa/vocab.hpp"

#include <fstream>

#include "bioqa/errors.hpp"

namespace bioqa {

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  Vocab v;
  v.tokens_ = std::move(tokens);
  v.index_.reserve(v.tokens_.size());
  for (int i = 0; i < static_cast<int>(v.tokens_.size()); ++i) {
    auto [it, inserted] = v.index_.emplace(v.tokens_[i], i);
    if (!inserted) throw Error("vocab: duplicate token \"" + v.tokens_[i] + "\"");
  }
  v.pad_ = v.id("[PAD]");
  v.unk_ = v.id("[UNK]");
  v.cls_ = v.id("[CLS]");
  v.sep_ = v.id("[SEP]");
  if (v.pad_ < 0 || v.unk_ < 0 || v.cls_ < 0 || v.sep_ < 0)
    throw Error("vocab: [PAD], [UNK], [CLS] and [SEP] are required");
  return v;
}

Vocab Vocab::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("vocab: cannot open " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    tokens.push_back(line);
  }
  return from_tokens(std::move(tokens));
}

int Vocab::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? -1 : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || id >= size()) throw Error("vocab: id " + std::to_string(id) + " out of range");
  return tokens_[id];
}

}  // namespace bioqa
