#pragma once

#include <Eigen/Dense>

#include <vector>

namespace tcmarket::lp {

enum class Sense { Eq, Le, Ge };

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

// min c.x  subject to  A x (sense) b,  x_j >= 0 for bounded columns,
// x_j free where `free_col[j]` is true.  Upper bounds, when needed, are
// expressed as explicit rows by the caller.
struct Problem {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  std::vector<Sense> sense;     // one per row
  Eigen::VectorXd c;
  std::vector<char> free_col;   // empty means all columns nonnegative

  int rows() const { return static_cast<int>(A.rows()); }
  int cols() const { return static_cast<int>(A.cols()); }
};

struct Solution {
  Status status = Status::IterationLimit;

  Eigen::VectorXd x;  // primal solution (Optimal)
  double objective = 0.0;

  // Row duals at optimality, signed so that for every feasible x
  //   c.x >= objective + y.(b - A x) ... with y_r >= 0 on Ge rows and
  // y_r <= 0 on Le rows (free on Eq rows).
  Eigen::VectorXd y;

  // Infeasibility certificate (Infeasible): row multipliers with
  //   farkas_r >= 0 on Ge rows, <= 0 on Le rows, free on Eq rows,
  //   (farkas^T A)_j <= 0 for nonnegative columns, = 0 for free columns,
  //   farkas . b > 0,
  // which together prove that no feasible point exists.
  Eigen::VectorXd farkas;
};

// Dense two-phase primal simplex.  Dantzig pricing with an automatic switch
// to Bland's rule after a stall, plus periodic refactorization of the
// tableau from the exact input data, which keeps badly scaled or heavily
// degenerate instances from shuffling on accumulated roundoff.
Solution solve(const Problem& p, double tol = 1e-9, int max_iter = 50000);

}  // namespace tcmarket::lp
