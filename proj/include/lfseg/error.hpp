#pragma once

#include <stdexcept>
#include <string>

namespace lfseg {

/// Failure categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
  argument,   // caller passed something outside an operation's contract
  config,     // configuration is invalid or inconsistent
  format,     // a file does not follow its declared schema
  data,       // a file parses but its content is unusable
  transport,  // the remote segmenter failed or answered garbage
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& what) : Error(ErrorKind::argument, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(ErrorKind::format, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class TransportError : public Error {
 public:
  explicit TransportError(const std::string& what) : Error(ErrorKind::transport, what) {}
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::argument: return "argument";
    case ErrorKind::config: return "config";
    case ErrorKind::format: return "format";
    case ErrorKind::data: return "data";
    case ErrorKind::transport: return "transport";
  }
  return "unknown";
}

}  // namespace lfseg
