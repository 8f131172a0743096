#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace dada {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec3 = Eigen::Vector3d;

// Which of the two worlds a model or evidence trace belongs to.
enum class WorldTag { kFactual, kCounterfactual };

inline const char* world_name(WorldTag w) {
  return w == WorldTag::kFactual ? "factual" : "counterfactual";
}

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid value passed to a numerical routine (non-finite input, bad shape
// parameter, negative variance, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// A simulated trajectory left the representable range.
class DivergedError : public Error {
 public:
  DivergedError(const std::string& msg, long step)
      : Error(msg + " at step " + std::to_string(step)), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

// A matrix required to be positive definite failed to factorize.
class IllConditionedError : public Error {
 public:
  IllConditionedError(const std::string& msg, double condition)
      : Error(msg + " (condition number " + std::to_string(condition) + ")"),
        condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

// Configuration / validation problem; the CLI maps this to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace dada
