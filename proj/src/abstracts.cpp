#include "bioqa/abstracts.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "bioqa/errors.hpp"

namespace bioqa {

using nlohmann::json;

Abstract make_abstract(std::string pmid, std::string title, std::string body) {
  Abstract a;
  a.pmid = std::move(pmid);
  a.title = std::move(title);
  a.body = std::move(body);
  a.full_text = a.title + " " + a.body;
  a.sentence_spans = split_sentences(a.full_text);
  return a;
}

void MemoryAbstractStore::add(Abstract a) {
  abstracts_[a.pmid] = std::move(a);
}

const Abstract& MemoryAbstractStore::get(const std::string& pmid) {
  auto it = abstracts_.find(pmid);
  if (it == abstracts_.end()) throw FetchError(pmid, "abstract not in store");
  return it->second;
}

AbstractFetcher http_abstract_fetcher(std::string base_url, std::chrono::milliseconds timeout) {
  // split "<scheme>://<host:port></prefix>" into origin + path prefix
  std::string origin = base_url;
  std::string prefix;
  std::size_t scheme = base_url.find("://");
  std::size_t slash = base_url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (slash != std::string::npos) {
    origin = base_url.substr(0, slash);
    prefix = base_url.substr(slash);
    if (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  }
  return [origin, prefix, timeout](const std::string& pmid) {
    httplib::Client client(origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    const std::string path = prefix + "/efetch?db=pubmed&id=" + pmid + "&retmode=json";
    auto res = client.Get(path);
    if (!res) throw FetchError(pmid, "abstract service unreachable at " + origin);
    if (res->status != 200)
      throw FetchError(pmid, "abstract service returned status " + std::to_string(res->status));
    json j;
    try {
      j = json::parse(res->body);
    } catch (const json::parse_error& e) {
      throw FetchError(pmid, std::string("bad abstract payload: ") + e.what());
    }
    return std::make_pair(j.value("title", ""), j.value("body", ""));
  };
}

namespace {

class FileLock {
 public:
  explicit FileLock(const std::filesystem::path& path) {
    fd_ = ::open(path.c_str(), O_CREAT | O_RDWR, 0644);
    if (fd_ >= 0) ::flock(fd_, LOCK_EX);
  }
  ~FileLock() {
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
    }
  }

 private:
  int fd_ = -1;
};

}  // namespace

CachedAbstractStore::CachedAbstractStore(std::filesystem::path cache_dir, AbstractFetcher fetcher)
    : dir_(std::move(cache_dir)), fetch_(std::move(fetcher)) {
  std::filesystem::create_directories(dir_);
}

const Abstract& CachedAbstractStore::get(const std::string& pmid) {
  if (pmid.empty()) throw FetchError(pmid, "empty pmid");
  std::lock_guard<std::mutex> lock(mu_);
  auto it = loaded_.find(pmid);
  if (it != loaded_.end()) return it->second;

  const std::filesystem::path file = dir_ / (pmid + ".json");
  if (std::filesystem::exists(file)) {
    std::ifstream in(file);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw FetchError(pmid, std::string("corrupt cache entry ") + file.string() + ": " + e.what());
    }
    auto [pos, ok] =
        loaded_.emplace(pmid, make_abstract(pmid, j.value("title", ""), j.value("body", "")));
    return pos->second;
  }

  if (!fetch_) throw FetchError(pmid, "not cached and no abstract service configured");
  auto [title, body] = fetch_(pmid);
  if (body.empty()) throw FetchError(pmid, "abstract service returned an empty body");

  {
    FileLock guard(dir_ / ".lock");
    const std::filesystem::path tmp = dir_ / (pmid + ".json.tmp");
    {
      std::ofstream out(tmp);
      json j;
      j["pmid"] = pmid;
      j["title"] = title;
      j["body"] = body;
      out << j.dump(1) << "\n";
    }
    std::filesystem::rename(tmp, file);
  }

  auto [pos, ok] = loaded_.emplace(pmid, make_abstract(pmid, title, body));
  return pos->second;
}

}  // namespace bioqa
