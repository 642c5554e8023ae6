#pragma once

#include <stdexcept>
#include <string>

namespace xstab {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LoadError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Scenario selection produced no usable rows.
class ScenarioError : public Error {
 public:
  using Error::Error;
};

class SplitError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

class ApplyError : public Error {
 public:
  using Error::Error;
};

class OversampleError : public Error {
 public:
  using Error::Error;
};

class ModelError : public Error {
 public:
  using Error::Error;
};

class EvalError : public Error {
 public:
  using Error::Error;
};

class FeatureMismatchError : public Error {
 public:
  using Error::Error;
};

// Exact Shapley enumeration refused because the feature count is too large.
class EnumerationLimitError : public Error {
 public:
  using Error::Error;
};

// A stability metric is not computable on the given inputs (too few shared
// features, all-tied scores, empty top lists). Reports record these as absent.
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

// Wrong kind of importance vector handed to a magnitude comparison.
class SourceMismatchError : public Error {
 public:
  using Error::Error;
};

}  // namespace xstab
