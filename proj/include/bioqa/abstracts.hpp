#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "bioqa/text.hpp"

namespace bioqa {

// A PubMed abstract. full_text is title + single space + body; sentence
// spans index into full_text.
struct Abstract {
  std::string pmid;
  std::string title;
  std::string body;
  std::string full_text;
  std::vector<CharSpan> sentence_spans;
};

Abstract make_abstract(std::string pmid, std::string title, std::string body);

class AbstractStore {
 public:
  virtual ~AbstractStore() = default;
  // Throws FetchError when the abstract cannot be resolved.
  virtual const Abstract& get(const std::string& pmid) = 0;
};

class MemoryAbstractStore : public AbstractStore {
 public:
  void add(Abstract a);
  const Abstract& get(const std::string& pmid) override;

 private:
  std::unordered_map<std::string, Abstract> abstracts_;
};

// Returns {title, body} for a pmid; throws FetchError on failure.
using AbstractFetcher = std::function<std::pair<std::string, std::string>(const std::string&)>;

// Fetcher against an efetch-style endpoint:
//   GET <base_url>/efetch?db=pubmed&id=<pmid>&retmode=json
// expecting a JSON body {"pmid": ..., "title": ..., "body": ...}.
AbstractFetcher http_abstract_fetcher(std::string base_url,
                                      std::chrono::milliseconds timeout = std::chrono::seconds(10));

// Disk cache (one <pmid>.json per abstract) in front of an optional
// fetcher. Without a fetcher, cache misses raise FetchError. Writes go
// through an exclusive file lock and an atomic rename so concurrent
// readers never observe partial files.
class CachedAbstractStore : public AbstractStore {
 public:
  CachedAbstractStore(std::filesystem::path cache_dir, AbstractFetcher fetcher = nullptr);
  const Abstract& get(const std::string& pmid) override;

 private:
  std::filesystem::path dir_;
  AbstractFetcher fetch_;
  std::unordered_map<std::string, Abstract> loaded_;
  std::mutex mu_;
};

}  // namespace bioqa
