#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace uqsense {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data: wrong lengths, missing keys, unreadable files.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration values (out-of-range flags, inconsistent modes).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A numeric operation left its domain. Carries the offending sample
/// index and pixel when the failure happened inside an ensemble.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what,
                       std::optional<std::size_t> sample = std::nullopt,
                       std::optional<std::size_t> pixel = std::nullopt)
      : Error(decorate(what, sample, pixel)), message_(what), sample_(sample), pixel_(pixel) {}

  /// The message without the pixel/sample suffix, for re-raising with
  /// more context.
  const std::string& message() const { return message_; }

  std::optional<std::size_t> sample() const { return sample_; }
  std::optional<std::size_t> pixel() const { return pixel_; }

 private:
  static std::string decorate(const std::string& what,
                              std::optional<std::size_t> sample,
                              std::optional<std::size_t> pixel) {
    std::string out = what;
    if (pixel) out += " (pixel " + std::to_string(*pixel) + ")";
    if (sample) out += " (sample " + std::to_string(*sample) + ")";
    return out;
  }

  std::string message_;
  std::optional<std::size_t> sample_;
  std::optional<std::size_t> pixel_;
};

/// Least-squares fit on degenerate data.
class FitError : public Error {
 public:
  using Error::Error;
};

/// The equal-accuracy search could not reach its target within the
/// available iteration budget.
class UnreachableTarget : public Error {
 public:
  using Error::Error;
};

}  // namespace uqsense
