#include "tcmarket/ipm.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace tcmarket::ipm {
namespace {

constexpr double kArgFloor = 1e-12;   // utility evaluation guard
constexpr int kMaxIter = 300;
constexpr double kDivergence = 1e9;   // |x|_inf beyond this means unbounded

struct Gradients {
  Eigen::VectorXd g;  // objective gradient
  Eigen::VectorXd h;  // diagonal of the (nonpositive) Hessian
};

double objective(const Problem& p, const Eigen::VectorXd& x) {
  double v = p.c.size() ? p.c.dot(x) : 0.0;
  for (const auto& t : p.utilities) v += t.weight * t.u.value(std::max(x(t.index), kArgFloor));
  return v;
}

Gradients gradients(const Problem& p, const Eigen::VectorXd& x) {
  Gradients gr;
  gr.g = p.c.size() ? p.c : Eigen::VectorXd::Zero(p.nvar);
  gr.h = Eigen::VectorXd::Zero(p.nvar);
  for (const auto& t : p.utilities) {
    double xi = std::max(x(t.index), kArgFloor);
    gr.g(t.index) += t.weight * t.u.marginal(xi);
    // U'' in closed form: log: -1/x^2; power: (p-1) x^(p-2).
    double upp = t.u.kind == Utility::Kind::Log ? -1.0 / (xi * xi)
                                                : (t.u.p - 1.0) * std::pow(xi, t.u.p - 2.0);
    gr.h(t.index) += t.weight * upp;
  }
  return gr;
}

// Largest step alpha <= 1 with v + alpha dv >= (1 - tau) v on masked entries.
double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv, const std::vector<char>& mask,
                double tau) {
  double alpha = 1.0;
  for (int j = 0; j < v.size(); ++j) {
    if (!mask[j] || dv(j) >= 0.0) continue;
    alpha = std::min(alpha, -tau * v(j) / dv(j));
  }
  return alpha;
}

}  // namespace

Result maximize(const Problem& p) {
  const int n = p.nvar;
  const int m = static_cast<int>(p.A.rows());
  Result res;

  std::vector<char> nn = p.nonneg;
  nn.resize(n, 0);

  Eigen::VectorXd x = p.x0;
  for (int j = 0; j < n; ++j)
    if (nn[j]) x(j) = std::max(x(j), 1e-2);

  Gradients gr = gradients(p, x);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
  int n_bounded = 0;
  for (int j = 0; j < n; ++j)
    if (nn[j]) {
      z(j) = std::max(1.0, std::abs(gr.g(j)));
      ++n_bounded;
    }
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);

  const double bscale = 1.0 + (m ? p.b.cwiseAbs().maxCoeff() : 0.0);
  const double x0scale = 1.0 + x.cwiseAbs().maxCoeff();

  // The augmented KKT matrix [G A^T; A -dd] has a fixed sparsity pattern;
  // only the diagonal changes between iterations.
  using Trip = Eigen::Triplet<double>;
  std::vector<Trip> fixed;
  for (int k = 0; k < p.A.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(p.A, k); it; ++it) {
      fixed.emplace_back(static_cast<int>(it.row()) + n, static_cast<int>(it.col()), it.value());
      fixed.emplace_back(static_cast<int>(it.col()), static_cast<int>(it.row()) + n, it.value());
    }

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  double reg_p = 1e-11, reg_d = 1e-11;

  auto solve_kkt = [&](const Eigen::SparseMatrix<double>& K, const Eigen::VectorXd& rhs,
                       Eigen::VectorXd& sol) {
    sol = lu.solve(rhs);
    // One round of iterative refinement; the multi-scale tree problems
    // benefit measurably in the dual components.
    Eigen::VectorXd r = rhs - K * sol;
    sol += lu.solve(r);
  };

  for (int iter = 1; iter <= kMaxIter; ++iter) {
    res.iterations = iter;
    gr = gradients(p, x);

    Eigen::VectorXd rp = p.A * x - p.b;
    Eigen::VectorXd rd = gr.g - p.A.transpose() * y + z;
    double mu = 0.0;
    for (int j = 0; j < n; ++j)
      if (nn[j]) mu += x(j) * z(j);
    if (n_bounded) mu /= n_bounded;

    double obj = objective(p, x);
    res.primal_residual = m ? rp.cwiseAbs().maxCoeff() : 0.0;
    res.dual_residual = rd.cwiseAbs().maxCoeff();
    res.mu = mu;
    res.objective = obj;
    res.x = x;
    res.y = y;
    res.z = z;

    bool primal_ok = res.primal_residual <= 1e-10 * bscale;
    bool dual_ok = res.dual_residual <= 1e-10 * (1.0 + gr.g.cwiseAbs().maxCoeff());
    if (primal_ok && dual_ok && mu <= 1e-12 * (1.0 + std::abs(obj))) {
      res.status = Status::Converged;
      return res;
    }
    if (x.cwiseAbs().maxCoeff() > kDivergence * x0scale) {
      res.status = Status::Unbounded;
      return res;
    }

    // Assemble the augmented system.
    Eigen::VectorXd G = Eigen::VectorXd::Constant(n, reg_p);
    G -= gr.h;  // -H >= 0
    for (int j = 0; j < n; ++j)
      if (nn[j]) G(j) += z(j) / std::max(x(j), kArgFloor);
    std::vector<Trip> trips = fixed;
    trips.reserve(fixed.size() + n + m);
    for (int j = 0; j < n; ++j) trips.emplace_back(j, j, G(j));
    for (int r = 0; r < m; ++r) trips.emplace_back(n + r, n + r, -reg_d);
    Eigen::SparseMatrix<double> K(n + m, n + m);
    K.setFromTriplets(trips.begin(), trips.end());
    lu.compute(K);
    if (lu.info() != Eigen::Success) {
      reg_p *= 100.0;
      reg_d *= 100.0;
      if (reg_p > 1e-5) { res.status = Status::NotConverged; return res; }
      continue;
    }

    // Affine predictor.
    Eigen::VectorXd q_aff = rd;
    for (int j = 0; j < n; ++j)
      if (nn[j]) q_aff(j) += (-x(j) * z(j)) / std::max(x(j), kArgFloor);
    Eigen::VectorXd rhs(n + m);
    rhs.head(n) = q_aff;
    rhs.tail(m) = -rp;
    Eigen::VectorXd sol(n + m);
    solve_kkt(K, rhs, sol);
    Eigen::VectorXd dx = sol.head(n), dy = sol.tail(m);
    Eigen::VectorXd dz = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < n; ++j)
      if (nn[j]) {
        double xi = std::max(x(j), kArgFloor);
        dz(j) = (-x(j) * z(j) - z(j) * dx(j)) / xi;
      }

    double a_p = max_step(x, dx, nn, 1.0);
    double a_d = max_step(z, dz, nn, 1.0);
    double mu_aff = 0.0;
    for (int j = 0; j < n; ++j)
      if (nn[j]) mu_aff += (x(j) + a_p * dx(j)) * (z(j) + a_d * dz(j));
    if (n_bounded) mu_aff /= n_bounded;
    double sigma = mu > 0.0 ? std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3.0) : 0.1;

    // Corrector; the affine direction only enters through the product term.
    Eigen::VectorXd cross = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < n; ++j)
      if (nn[j]) cross(j) = dx(j) * dz(j);
    Eigen::VectorXd q = rd;
    for (int j = 0; j < n; ++j)
      if (nn[j]) {
        double xi = std::max(x(j), kArgFloor);
        q(j) += (sigma * mu - x(j) * z(j) - cross(j)) / xi;
      }
    rhs.head(n) = q;
    rhs.tail(m) = -rp;
    solve_kkt(K, rhs, sol);
    dx = sol.head(n);
    dy = sol.tail(m);
    for (int j = 0; j < n; ++j)
      if (nn[j]) {
        double xi = std::max(x(j), kArgFloor);
        dz(j) = (sigma * mu - x(j) * z(j) - cross(j)) / xi - z(j) / xi * dx(j);
      }

    double tau = std::max(0.99, 1.0 - mu);
    double step_p = max_step(x, dx, nn, tau);
    double step_d = max_step(z, dz, nn, tau);
    if (!std::isfinite(step_p) || !std::isfinite(step_d) || !dx.allFinite() || !dy.allFinite()) {
      res.status = Status::NotConverged;
      return res;
    }
    x += step_p * dx;
    y += step_d * dy;
    z += step_d * dz;
  }
  // Exhausted iterations.  When the iterate has left the starting scale far
  // behind while staying primal-feasible, the objective is running off to its
  // supremum rather than stalling: report unboundedness.
  res.status = (x.cwiseAbs().maxCoeff() > 1e4 * x0scale && res.primal_residual <= 1e-8 * bscale)
                   ? Status::Unbounded
                   : Status::NotConverged;
  return res;
}

}  // namespace tcmarket::ipm
