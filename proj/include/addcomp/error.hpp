#pragma once

#include <stdexcept>
#include <string>

namespace addcomp {

// Every failure raised by the library carries one of these kinds so that the
// CLI can map it onto a distinct exit status.
enum class ErrorKind {
  Parameter,   // invalid hyper-parameter or argument value
  Domain,      // argument outside the mathematical domain of a function
  Lookup,      // unknown word or target
  Decode,      // malformed input bytes or file contents
  Config,      // malformed pipeline configuration
  Io,          // missing or unwritable file
  Statistics,  // too few samples, undefined correlation, failed fit
  Training,    // optimizer divergence
  Evaluation,  // nothing usable to evaluate or report
  Normalization,  // vector normalization constants are undefined
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

}  // namespace addcomp
