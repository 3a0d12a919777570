#pragma once

#include <stdexcept>
#include <string>

namespace fedgraph {

// Every error raised by the library derives from Error and carries a kind so
// the CLI can map it to an exit code without string matching.
enum class ErrorKind {
  Input,     // malformed data or violated precondition on user input
  Shape,     // tensor shape mismatch inside the differentiation engine
  Numeric,   // NaN / Inf detected at an op boundary
  Usage,     // API misuse (backward on a detached tensor, bad sweep name...)
  Protocol,  // federated protocol violation (mismatched client blocks)
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ErrorKind::Input, what) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(ErrorKind::Shape, what) {}
};

class NumericFault : public Error {
 public:
  explicit NumericFault(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& what) : Error(ErrorKind::Protocol, what) {}
};

}  // namespace fedgraph
