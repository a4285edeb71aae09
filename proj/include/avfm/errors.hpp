#pragma once

#include <stdexcept>
#include <string>

namespace avfm {

// Invalid domain input: out-of-space configs, bad alpha, malformed fixtures.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem / file-format failures.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Contract violations in an LLM response body.
enum class ProtocolFault { malformed, keys, value, topk_overflow };

class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(ProtocolFault fault, const std::string& what)
      : std::runtime_error(what), fault_(fault) {}
  ProtocolFault fault() const { return fault_; }

 private:
  ProtocolFault fault_;
};

// Transport-level failures of a remote agent call (timeout, non-2xx,
// unparseable transport envelope). Distinct from ProtocolError.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const char* to_string(ProtocolFault fault);

}  // namespace avfm
