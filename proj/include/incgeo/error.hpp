#pragma once

#include <stdexcept>
#include <string>

namespace incgeo {

/// A scale that is not dyadic, out of range, or finer than allowed.
class InvalidScale : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// An operation was called outside its documented domain.
class PreconditionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input file, bundle or JSON config.
class ParseError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A nice configuration whose stated invariants do not hold.
class InvalidConfiguration : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A randomized generator ran out of attempts.
class GeneratorExhausted : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A constructive refinement did not satisfy the property it was built for.
class VerificationError : public std::runtime_error {
public:
  VerificationError(std::string property, double measured, double threshold,
                    const std::string& detail)
      : std::runtime_error(detail), property_(std::move(property)),
        measured_(measured), threshold_(threshold) {}

  const std::string& property() const noexcept { return property_; }
  double measured() const noexcept { return measured_; }
  double threshold() const noexcept { return threshold_; }

private:
  std::string property_;
  double measured_;
  double threshold_;
};

} // namespace incgeo
