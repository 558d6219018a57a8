#pragma once

#include <stdexcept>
#include <string>

namespace oregonator {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonPositiveParameter : public Error {
 public:
  explicit NonPositiveParameter(std::string field)
      : Error("parameter '" + field + "' must be strictly positive"),
        field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class InvalidDomain : public Error {
 public:
  using Error::Error;
};

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

/// Raised when a state leaves the finite range; carries the time of failure.
class NonFiniteState : public Error {
 public:
  explicit NonFiniteState(double t)
      : Error("state became non-finite or exceeded the blow-up threshold at t = " +
              std::to_string(t)),
        time_(t) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

class DegenerateFit : public Error {
 public:
  using Error::Error;
};

class ZeroDifference : public Error {
 public:
  using Error::Error;
};

class RankDeficient : public Error {
 public:
  explicit RankDeficient(std::size_t index)
      : Error("tangent direction " + std::to_string(index) +
              " is linearly dependent on its predecessors"),
        index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class NotConverged : public Error {
 public:
  using Error::Error;
};

class ConfigParse : public Error {
 public:
  using Error::Error;
};

}  // namespace oregonator
