#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace bfa {

// Base for all domain errors. `kind` is a stable machine-readable tag; the
// CLI maps it to {"error": {"kind", "detail"}} on stderr with exit code 2.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& detail)
      : std::runtime_error(detail), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

// Violated precondition: width mismatch, bad length, out-of-range parameter.
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& detail) : Error("contract", detail) {}
};

// Rejected model payload: negative entries, column sums out of tolerance.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& detail) : Error("validation", detail) {}
};

// An eigenvalue (or per-qubit determinant) fell below the invertibility
// floor. Happens when some marginal error probability approaches 1/2, i.e.
// the readout noise destroys the information needed for inversion.
class NearSingularError : public Error {
 public:
  NearSingularError(std::size_t index, double value)
      : Error("near_singular",
              "eigenvalue " + std::to_string(index) + " has magnitude " +
                  std::to_string(value) + " below the invertibility floor"),
        index_(index),
        value_(value) {}

  std::size_t index() const noexcept { return index_; }
  double value() const noexcept { return value_; }

 private:
  std::size_t index_;
  double value_;
};

class IllConditionedError : public Error {
 public:
  explicit IllConditionedError(double condition)
      : Error("ill_conditioned", "dense model condition estimate " +
                                     std::to_string(condition) +
                                     " exceeds the limit of 1e8"),
        condition_(condition) {}

  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

// Reduced-support mitigation requires the support set to be closed under
// XOR with every syndrome of nonzero probability. Carries one witness pair.
class SupportNotClosedError : public Error {
 public:
  SupportNotClosedError(std::uint32_t syndrome, std::uint32_t outcome)
      : Error("support_not_closed",
              "support is not closed: outcome " + std::to_string(outcome) +
                  " XOR syndrome " + std::to_string(syndrome) +
                  " falls outside the support"),
        syndrome_(syndrome),
        outcome_(outcome) {}

  std::uint32_t syndrome() const noexcept { return syndrome_; }
  std::uint32_t outcome() const noexcept { return outcome_; }

 private:
  std::uint32_t syndrome_;
  std::uint32_t outcome_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& detail) : Error("io", detail) {}
};

}  // namespace bfa
