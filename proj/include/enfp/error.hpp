#pragma once

#include <stdexcept>
#include <string>

namespace enfp {

enum class ErrorKind
{
  invalid_argument,
  invalid_scale,
  domain,
  data,
  cannot_classify,
  out_of_range,
  wrong_mode,
  missing_stratum,
  corrupt_ledger,
  non_convergence
};

const char* to_string(ErrorKind kind);

// Single exception type for the library; the kind drives CLI exit codes.
class Error : public std::runtime_error
{
public:
  Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(what)
    , kind_(kind)
  {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what)
{
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what)
{
  if (!cond)
    throw Error(kind, what);
}

} // namespace enfp
