#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace bioqa {

// WordPiece vocabulary: one token per line, id = line number. [PAD], [UNK],
// [CLS] and [SEP] must be present; continuation pieces carry "##".
class Vocab {
 public:
  static Vocab from_tokens(std::vector<std::string> tokens);
  static Vocab from_file(const std::filesystem::path& path);

  int id(std::string_view token) const;  // -1 when absent
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }

  int pad_id() const { return pad_; }
  int unk_id() const { return unk_; }
  int cls_id() const { return cls_; }
  int sep_id() const { return sep_; }

 private:
  Vocab() = default;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  int pad_ = -1, unk_ = -1, cls_ = -1, sep_ = -1;
};

}  // namespace bioqa
