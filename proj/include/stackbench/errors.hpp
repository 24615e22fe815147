#pragma once

#include <stdexcept>
#include <string>

namespace stackbench {

/// Bad arguments or shapes passed to a library call.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A LearnerSpec (or ensemble spec) whose hyperparameters are out of range.
class InvalidSpec : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// A metric that is undefined for the given labels (e.g. AUC with one class).
class UndefinedMetric : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Training failed; the message is prefixed with the learner family tag.
class FitError : public std::runtime_error {
 public:
  FitError(const std::string& family, const std::string& what)
      : std::runtime_error(family + ": " + what), family_(family) {}
  const std::string& family() const noexcept { return family_; }

 private:
  std::string family_;
};

/// CSV / JSON documents that cannot be parsed, with row/column context.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stackbench
