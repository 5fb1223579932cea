#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace enscore {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A set of points in R^D stored one per row.
using SampleSet = Eigen::MatrixXd;

/// Precondition or dimension contract broken by the caller.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Every importance weight of a frozen estimator is zero.
class EstimatorDegenerate : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An integrated ensemble member overflowed or became NaN.
class NonFiniteState : public std::runtime_error {
 public:
  NonFiniteState(std::size_t member, double time, const std::string& what)
      : std::runtime_error(what), member_(member), time_(time) {}

  std::size_t member() const { return member_; }
  double time() const { return time_; }

 private:
  std::size_t member_;
  double time_;
};

inline void require(bool cond, const char* message) {
  if (!cond) throw ContractViolation(message);
}

}  // namespace enscore
