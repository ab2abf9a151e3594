#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <vector>

#include "tcmarket/utility.hpp"

namespace tcmarket::ipm {

// Separable concave program
//
//   maximize    c.x + sum_k weight_k * U_k(x_{index_k})
//   subject to  A x = b,   x_j >= 0 for flagged columns
//
// solved by a primal-dual path-following method.  Utility-bearing columns
// must be flagged nonnegative; the utility domain (0, inf) acts as a
// logarithmic barrier keeping them strictly positive.
struct UtilityTerm {
  int index = 0;
  double weight = 1.0;  // strictly positive
  Utility u;
};

struct Problem {
  int nvar = 0;
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b;
  Eigen::VectorXd c;  // may be zero-length for "no linear part"
  std::vector<UtilityTerm> utilities;
  std::vector<char> nonneg;  // size nvar
  Eigen::VectorXd x0;        // start; strictly positive on nonneg columns
};

enum class Status { Converged, Unbounded, NotConverged };

struct Result {
  Status status = Status::NotConverged;
  Eigen::VectorXd x;  // primal
  Eigen::VectorXd y;  // equality multipliers
  Eigen::VectorXd z;  // bound multipliers (0 on free columns)
  double objective = 0.0;
  double mu = 0.0;               // final average complementarity
  double primal_residual = 0.0;  // ||A x - b||_inf
  double dual_residual = 0.0;    // ||grad - A^T y + z||_inf
  int iterations = 0;
};

Result maximize(const Problem& p);

}  // namespace tcmarket::ipm
