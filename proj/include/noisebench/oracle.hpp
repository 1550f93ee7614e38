#pragma once

#include <stdexcept>
#include <string>

#include "noisebench/annotation.hpp"
#include "noisebench/image.hpp"

namespace noisebench {

/// Any failure to obtain an annotation from an oracle.
class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingCredentials : public OracleError {
 public:
  explicit MissingCredentials(const std::string& env_var)
      : OracleError("environment variable " + env_var + " is not set"), env_var_(env_var) {}
  const std::string& env_var() const noexcept { return env_var_; }

 private:
  std::string env_var_;
};

class TransportError : public OracleError {
 public:
  TransportError(const std::string& what, int attempts)
      : OracleError(what + " (after " + std::to_string(attempts) + " attempts)"), attempts_(attempts) {}
  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

class HttpStatusError : public OracleError {
 public:
  HttpStatusError(int status, const std::string& body)
      : OracleError("HTTP status " + std::to_string(status) + (body.empty() ? "" : ": " + body.substr(0, 200))),
        status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class ResponseParseError : public OracleError {
 public:
  using OracleError::OracleError;
};

/// The black box under attack. Implementations must tolerate concurrent calls.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual Annotation annotate(const Image& img) = 0;
  /// Short self-description recorded in report metadata.
  virtual std::string identity() const = 0;
};

/// Returns the same annotation for every input.
class ConstantOracle final : public Oracle {
 public:
  explicit ConstantOracle(Annotation fixed) : fixed_(normalized(std::move(fixed))) {}
  Annotation annotate(const Image&) override { return fixed_; }
  std::string identity() const override { return "constant:" + top1_text(fixed_); }

 private:
  Annotation fixed_;
};

}  // namespace noisebench
