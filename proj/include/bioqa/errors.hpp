#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace bioqa {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

// Abstract retrieval failure; carries the pmid that was requested.
class FetchError : public Error {
 public:
  FetchError(std::string pmid, const std::string& what)
      : Error("pmid " + pmid + ": " + what), pmid_(std::move(pmid)) {}
  const std::string& pmid() const { return pmid_; }

 private:
  std::string pmid_;
};

class TrainError : public Error {
 public:
  using Error::Error;
};

}  // namespace bioqa
