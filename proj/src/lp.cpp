#include "tcmarket/lp.hpp"

#include <cmath>
#include <limits>

namespace tcmarket::lp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Dense tableau with an attached reduced-cost row.  Rows 0..m-1 hold the
// current B^-1 A picture, row m holds reduced costs; the last column is the
// right-hand side (resp. the negated objective in the cost row).
struct Tableau {
  Eigen::MatrixXd t;          // (m+1) x (ncol+1)
  std::vector<int> basis;     // size m, column index basic in each row
  int m = 0, ncol = 0;

  double& rhs(int i) { return t(i, ncol); }
  double rc(int j) const { return t(m, j); }
  double objective() const { return -t(m, ncol); }
};

void pivot(Tableau& tb, int row, int col) {
  tb.t.row(row) /= tb.t(row, col);
  for (int i = 0; i <= tb.m; ++i) {
    if (i == row) continue;
    double factor = tb.t(i, col);
    if (factor != 0.0) tb.t.row(i) -= factor * tb.t.row(row);
  }
  tb.basis[row] = col;
}

void set_cost_row(Tableau& tb, const Eigen::VectorXd& cost) {
  tb.t.row(tb.m).setZero();
  tb.t.row(tb.m).head(tb.ncol) = cost.transpose();
  for (int i = 0; i < tb.m; ++i) {
    double cb = cost(tb.basis[i]);
    if (cb != 0.0) tb.t.row(tb.m) -= cb * tb.t.row(i);
  }
}

// Rebuilds the tableau as B^-1 [A | b] from the pristine standard-form data.
// In-place pivoting accumulates roundoff; on badly scaled or degenerate
// problems the noise in reduced costs near the tolerance makes the loop
// shuffle forever, and refactorizing from exact data restores progress.
// Returns false (leaving the tableau untouched) when the recorded basis is
// numerically singular.
bool refactorize(Tableau& tb, const Eigen::MatrixXd& base, const Eigen::VectorXd& cost) {
  Eigen::MatrixXd B(tb.m, tb.m);
  for (int i = 0; i < tb.m; ++i) B.col(i) = base.col(tb.basis[i]);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
  Eigen::MatrixXd fresh = lu.solve(base);
  if (!fresh.allFinite()) return false;
  tb.t.topRows(tb.m) = fresh;
  set_cost_row(tb, cost);
  return true;
}

// Runs the simplex loop until optimality/unboundedness for the current cost
// row.  `allowed` masks columns that may enter.  `base` holds the exact
// initial rows [A | b] used for refactorization.  Returns Optimal, Unbounded
// or IterationLimit.
Status iterate(Tableau& tb, const Eigen::MatrixXd& base, const Eigen::VectorXd& cost,
               const std::vector<char>& allowed, const std::vector<char>& artificial,
               double tol, int& iter_budget) {
  bool bland = false;
  int stall = 0, since_refresh = 0, refreshes = 0;
  constexpr int kMaxRefresh = 40;
  double last_obj = tb.objective();

  auto pick_enter = [&]() {
    int enter = -1;
    if (!bland) {
      double best = -tol;
      for (int j = 0; j < tb.ncol; ++j)
        if (allowed[j] && tb.rc(j) < best) { best = tb.rc(j); enter = j; }
    } else {
      for (int j = 0; j < tb.ncol; ++j)
        if (allowed[j] && tb.rc(j) < -tol) { enter = j; break; }
    }
    return enter;
  };
  auto refresh = [&]() {
    ++refreshes;
    since_refresh = 0;
    if (!refactorize(tb, base, cost))
      refreshes = kMaxRefresh;  // singular basis: keep the stale tableau
  };

  while (iter_budget-- > 0) {
    int enter = pick_enter();
    if (enter < 0) {
      // Verify optimality against freshly computed reduced costs; stale
      // noise can hide (or fake) an improving column.
      if (since_refresh > 0 && refreshes < kMaxRefresh) {
        refresh();
        enter = pick_enter();
      }
      if (enter < 0)
        return tb.t.allFinite() ? Status::Optimal : Status::IterationLimit;
    }

    // Ratio test; prefer driving artificial variables out on ties.
    int leave = -1;
    double best_ratio = kInf;
    for (int i = 0; i < tb.m; ++i) {
      double a = tb.t(i, enter);
      if (a <= tol) continue;
      double ratio = tb.rhs(i) / a;
      double tie = leave < 0 ? 0.0 : 1e-10 * (1.0 + std::abs(best_ratio));
      if (ratio < best_ratio - tie) {
        best_ratio = ratio;
        leave = i;
      } else if (ratio < best_ratio + tie && leave >= 0) {
        bool cand_art = artificial[tb.basis[i]];
        bool cur_art = artificial[tb.basis[leave]];
        if ((cand_art && !cur_art) ||
            (cand_art == cur_art && tb.basis[i] < tb.basis[leave]))
          leave = i;
      }
    }
    if (leave < 0) {
      if (since_refresh > 0 && refreshes < kMaxRefresh) { refresh(); continue; }
      return Status::Unbounded;
    }

    pivot(tb, leave, enter);
    if (++since_refresh >= 500) refresh();

    double obj = tb.objective();
    if (obj < last_obj - 1e-12) {
      stall = 0;
      last_obj = obj;
      bland = false;
    } else if (++stall > 200) {
      if (!bland && refreshes < kMaxRefresh) refresh();
      bland = true;  // anti-cycling fallback
      stall = 0;
    }
  }
  return Status::IterationLimit;
}

}  // namespace

Solution solve(const Problem& p, double tol, int max_iter) {
  const int m = p.rows();
  const int n = p.cols();
  Solution out;

  // Column layout of the standard form: for each original column a positive
  // part, plus a negative part when the column is free; then one slack or
  // surplus per inequality row; then one artificial per row.
  std::vector<int> pos(n), neg(n, -1);
  int nstd = 0;
  for (int j = 0; j < n; ++j) {
    pos[j] = nstd++;
    if (!p.free_col.empty() && p.free_col[j]) neg[j] = nstd++;
  }
  std::vector<int> slack(m, -1);
  for (int r = 0; r < m; ++r)
    if (p.sense[r] != Sense::Eq) slack[r] = nstd++;
  const int art0 = nstd;
  const int ncol = nstd + m;

  Tableau tb;
  tb.m = m;
  tb.ncol = ncol;
  tb.t = Eigen::MatrixXd::Zero(m + 1, ncol + 1);
  tb.basis.resize(m);

  std::vector<double> flip(m, 1.0);
  for (int r = 0; r < m; ++r) {
    if (p.b(r) < 0.0) flip[r] = -1.0;
    for (int j = 0; j < n; ++j) {
      double a = flip[r] * p.A(r, j);
      if (a == 0.0) continue;
      tb.t(r, pos[j]) = a;
      if (neg[j] >= 0) tb.t(r, neg[j]) = -a;
    }
    if (slack[r] >= 0) {
      double s = (p.sense[r] == Sense::Le) ? 1.0 : -1.0;
      tb.t(r, slack[r]) = flip[r] * s;
    }
    tb.t(r, art0 + r) = 1.0;
    tb.rhs(r) = flip[r] * p.b(r);
    tb.basis[r] = art0 + r;
  }

  std::vector<char> artificial(ncol, 0);
  for (int r = 0; r < m; ++r) artificial[art0 + r] = 1;

  // Exact standard-form rows, kept pristine for refactorization.
  const Eigen::MatrixXd base = tb.t.topRows(m);

  // Phase 1: minimize the sum of artificials.
  Eigen::VectorXd phase1_cost = Eigen::VectorXd::Zero(ncol);
  for (int r = 0; r < m; ++r) phase1_cost(art0 + r) = 1.0;
  set_cost_row(tb, phase1_cost);

  std::vector<char> all(ncol, 1);
  int budget = max_iter;
  Status st = iterate(tb, base, phase1_cost, all, artificial, tol, budget);
  if (st == Status::IterationLimit) { out.status = st; return out; }

  refactorize(tb, base, phase1_cost);
  double feas_tol = tol * (1.0 + tb.t.col(ncol).head(m).cwiseAbs().maxCoeff());
  if (tb.objective() > feas_tol) {
    // Infeasible; phase-1 duals give a Farkas certificate on the original rows.
    out.status = Status::Infeasible;
    out.farkas = Eigen::VectorXd::Zero(m);
    for (int r = 0; r < m; ++r)
      out.farkas(r) = flip[r] * (1.0 - tb.rc(art0 + r));
    return out;
  }

  // Drive any artificial still basic (at level ~0) out of the basis.
  for (int r = 0; r < m; ++r) {
    if (!artificial[tb.basis[r]]) continue;
    for (int j = 0; j < art0; ++j) {
      if (std::abs(tb.t(r, j)) > tol) { pivot(tb, r, j); break; }
    }
  }

  // Phase 2 on the real costs; artificial columns may not re-enter.
  Eigen::VectorXd phase2_cost = Eigen::VectorXd::Zero(ncol);
  for (int j = 0; j < n; ++j) {
    phase2_cost(pos[j]) = p.c(j);
    if (neg[j] >= 0) phase2_cost(neg[j]) = -p.c(j);
  }
  set_cost_row(tb, phase2_cost);
  std::vector<char> allowed(ncol, 1);
  for (int j = art0; j < ncol; ++j) allowed[j] = 0;

  st = iterate(tb, base, phase2_cost, allowed, artificial, tol, budget);
  if (st != Status::Optimal) { out.status = st; return out; }

  refactorize(tb, base, phase2_cost);
  out.status = Status::Optimal;
  Eigen::VectorXd xstd = Eigen::VectorXd::Zero(ncol);
  for (int r = 0; r < m; ++r)
    if (tb.basis[r] < ncol) xstd(tb.basis[r]) = tb.rhs(r);
  out.x = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    out.x(j) = xstd(pos[j]);
    if (neg[j] >= 0) out.x(j) -= xstd(neg[j]);
  }
  out.objective = p.c.dot(out.x);
  out.y = Eigen::VectorXd::Zero(m);
  for (int r = 0; r < m; ++r)
    out.y(r) = flip[r] * (-tb.rc(art0 + r));
  return out;
}

}  // namespace tcmarket::lp
