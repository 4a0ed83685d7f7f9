#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace dgflow {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Invalid user input or inconsistent problem description.
class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A constitutive law was evaluated outside its domain of definition.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite data encountered while assembling; carries the element index.
class AssemblyError : public std::runtime_error {
 public:
  AssemblyError(const std::string& what, int element)
      : std::runtime_error(what + " (element " + std::to_string(element) + ")"), element_(element) {}
  int element() const { return element_; }

 private:
  int element_;
};

class LinearSolverError : public std::runtime_error {
 public:
  LinearSolverError(const std::string& what, double achieved_residual)
      : std::runtime_error(what), residual_(achieved_residual) {}
  double achieved_residual() const { return residual_; }

 private:
  double residual_;
};

/// Newton failed: diverged, hit the iteration cap, or the linear solve broke down.
class NonlinearSolverError : public std::runtime_error {
 public:
  NonlinearSolverError(const std::string& what, Eigen::VectorXd last_iterate, int iterations)
      : std::runtime_error(what), last_(std::move(last_iterate)), iterations_(iterations) {}
  const Eigen::VectorXd& last_iterate() const { return last_; }
  int iterations() const { return iterations_; }

 private:
  Eigen::VectorXd last_;
  int iterations_;
};

}  // namespace dgflow
