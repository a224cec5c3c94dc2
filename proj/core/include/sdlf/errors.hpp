#pragma once

#include <stdexcept>
#include <string>

namespace sdlf {

/// Base class for all errors raised by the library. `category()` is a short
/// stable token used by the CLI for its machine-parsable error lines.
class Error : public std::runtime_error {
public:
  Error(std::string category, const std::string &msg)
      : std::runtime_error(msg), category_(std::move(category)) {}
  const std::string &category() const { return category_; }

private:
  std::string category_;
};

/// Tensor shapes do not satisfy an operation's contract.
struct ShapeError : Error {
  explicit ShapeError(const std::string &msg) : Error("shape", msg) {}
};

/// Invalid configuration value (model, training, mask or file config).
struct ConfigError : Error {
  explicit ConfigError(const std::string &msg) : Error("config", msg) {}
};

/// An internal precondition was violated by the caller.
struct ContractError : Error {
  explicit ContractError(const std::string &msg) : Error("contract", msg) {}
};

/// File format / filesystem problems.
struct IoError : Error {
  explicit IoError(const std::string &msg) : Error("io", msg) {}
};

/// A k-space split left the loss mask empty; the caller retries with a new seed.
struct SplitEmptyError : Error {
  explicit SplitEmptyError(const std::string &msg) : Error("split", msg) {}
};

/// Training aborted (non-finite loss).
struct TrainingError : Error {
  explicit TrainingError(const std::string &msg) : Error("training", msg) {}
};

} // namespace sdlf
