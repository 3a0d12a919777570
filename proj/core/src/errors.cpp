#include "fedgraph/errors.hpp"

namespace fedgraph {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Input: return "input";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Protocol: return "protocol";
  }
  return "unknown";
}

}  // namespace fedgraph
