#pragma once

#include <stdexcept>
#include <string>

namespace ccnn {

// Shape or wiring mismatch between tensors, layers, or configs.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Scalar parameter outside its valid domain (beta <= 0, negative mse, ...).
class ParamError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// NaN/Inf encountered in a loss or gradient.
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed file contents (bad magic, bad header, unsupported version).
class FormatError : public IoError {
public:
  using IoError::IoError;
};

// File ended before the declared payload was read.
class TruncatedError : public IoError {
public:
  using IoError::IoError;
};

// Weight file tensors disagree with the expected network layout.
class DimMismatchError : public ConfigError {
public:
  DimMismatchError(std::string layer, const std::string& what)
      : ConfigError(what), layer_(std::move(layer)) {}
  const std::string& layer() const noexcept { return layer_; }

private:
  std::string layer_;
};

}  // namespace ccnn
