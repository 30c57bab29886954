#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace forgesr {

// Bad caller input: dims, ranges, unknown enum values.
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Persisted artifact failed validation on load. Carries the pair index when
// the failure is attributable to a single pair (-1 otherwise).
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& what, std::int64_t index = -1)
      : std::runtime_error(what), index_(index) {}
  std::int64_t index() const { return index_; }

private:
  std::int64_t index_;
};

// Loss became non-finite during training.
class TrainingDiverged : public std::runtime_error {
public:
  TrainingDiverged(const std::string& what, int epoch_or_iter)
      : std::runtime_error(what), at_(epoch_or_iter) {}
  int at() const { return at_; }

private:
  int at_;
};

// Degradation classifier failed its held-out accuracy gate.
class ClassifierUnusable : public std::runtime_error {
public:
  ClassifierUnusable(const std::string& what, double accuracy)
      : std::runtime_error(what), accuracy_(accuracy) {}
  double accuracy() const { return accuracy_; }

private:
  double accuracy_;
};

}  // namespace forgesr
