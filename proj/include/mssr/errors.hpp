#pragma once

#include <stdexcept>
#include <string>

namespace mssr {

enum class ErrorKind {
  config,     // invalid or inconsistent configuration / model parameters
  dimension,  // shape mismatch between dictionary, observation, or blocks
  numeric,    // solver produced non-finite values or an iteration failed
  io          // file or directory access problems
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(ErrorKind::config, msg) {}
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& msg) : Error(ErrorKind::dimension, msg) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg) : Error(ErrorKind::numeric, msg) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(ErrorKind::io, msg) {}
};

}  // namespace mssr
