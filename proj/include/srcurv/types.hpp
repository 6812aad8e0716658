#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace srcurv {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Input is malformed: bad expression text, bad scenario file, bad levels.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A numeric evaluation left its domain (log of nonpositive, singular
/// metric, chart exit, step-size underflow, ...).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace srcurv
