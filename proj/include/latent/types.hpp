#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace latent {

using Index = Eigen::Index;

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatX = Mat<double>;
using VecX = Vec<double>;

/// Rows are vertices, columns are latent dimensions.
template <typename Scalar>
using Positions = Mat<Scalar>;
using LatentPositions = Positions<double>;

/// Base for every error the library reports.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input files or out-of-range vertex indices.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Input outside an operation's domain (shape mismatch, d > n, N < 4...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Statistic undefined for the sample, e.g. zero distance variance.
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

/// Iterative solver stopped at its iteration cap above tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

}  // namespace latent
