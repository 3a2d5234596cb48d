#pragma once

#include <stdexcept>
#include <string>

namespace announce {

/// Base for every error raised by the library. The `kind()` string is the
/// stable name used in CLI messages and service payloads.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string &message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string &kind() const noexcept { return kind_; }

private:
  std::string kind_;
};

#define ANNOUNCE_DEFINE_ERROR(Name)                                            \
  class Name : public Error {                                                  \
  public:                                                                      \
    explicit Name(const std::string &message) : Error(#Name, message) {}       \
  }

ANNOUNCE_DEFINE_ERROR(InvalidConfig);
ANNOUNCE_DEFINE_ERROR(InvalidArgument);
ANNOUNCE_DEFINE_ERROR(ZeroLikelihood);
ANNOUNCE_DEFINE_ERROR(NoObservation);
ANNOUNCE_DEFINE_ERROR(FormatError);
ANNOUNCE_DEFINE_ERROR(ConfigMismatch);
ANNOUNCE_DEFINE_ERROR(IoError);

#undef ANNOUNCE_DEFINE_ERROR

} // namespace announce
