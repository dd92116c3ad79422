#pragma once

#include <stdexcept>
#include <string>

namespace ncd {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file. Carries the file and 1-based row (0 for the file as a whole).
class ParseError : public Error {
  public:
    ParseError(std::string file, std::size_t row, const std::string &what);

    const std::string &file() const noexcept { return file_; }
    std::size_t row() const noexcept { return row_; }

  private:
    std::string file_;
    std::size_t row_;
};

/// Input that parses but violates a data invariant.
class ValidationError : public Error {
  public:
    using Error::Error;
};

class ConfigError : public Error {
  public:
    using Error::Error;
};

class FitError : public Error {
  public:
    using Error::Error;
};

/// Prevalence surface that no nonnegative rates can reproduce.
class InconsistencyError : public Error {
  public:
    using Error::Error;
};

class UnreachableTarget : public Error {
  public:
    UnreachableTarget(const std::string &what, double max_reduction)
        : Error(what), max_reduction_(max_reduction) {}

    double max_reduction() const noexcept { return max_reduction_; }

  private:
    double max_reduction_;
};

class NonMonotoneError : public Error {
  public:
    using Error::Error;
};

/// A pipeline stage was invoked before the artefacts it consumes exist.
class PipelineOrderError : public Error {
  public:
    using Error::Error;
};

} // namespace ncd
