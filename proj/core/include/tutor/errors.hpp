#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tutor {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Caller broke an operation's precondition (bad grade, empty message, ...).
class PreconditionError : public Error {
public:
  using Error::Error;
};

class NotFoundError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

class StorageError : public Error {
public:
  using Error::Error;
};

class ToolError : public Error {
public:
  using Error::Error;
};

// Calculator input outside the grammar. `position` is a byte offset into the input.
class ParseError : public ToolError {
public:
  ParseError(const std::string& what, std::size_t position)
      : ToolError(what + " at position " + std::to_string(position)), position_(position) {}

  std::size_t position() const noexcept { return position_; }

private:
  std::size_t position_;
};

class DomainError : public ToolError {
public:
  using ToolError::ToolError;
};

class TransportError : public Error {
public:
  using Error::Error;
};

class ProtocolError : public Error {
public:
  using Error::Error;
};

}  // namespace tutor
