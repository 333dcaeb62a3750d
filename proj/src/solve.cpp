#include "robinflux/solve.hpp"

#include <cassert>
#include <cmath>

namespace robinflux {

namespace {

double dot(const std::vector<double>& x, const std::vector<double>& y) {
  double acc = 0.0;
  for (size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

double true_relres(const SparseOperator& A, const std::vector<double>& x,
                   const std::vector<double>& b, double bnorm,
                   std::vector<double>& scratch) {
  A.matvec(x.data(), scratch.data());
  double acc = 0.0;
  for (size_t i = 0; i < b.size(); ++i) {
    double d = b[i] - scratch[i];
    acc += d * d;
  }
  return std::sqrt(acc) / bnorm;
}

}  // namespace

std::vector<double> cg_solve(const SparseOperator& A,
                             const std::vector<double>& b,
                             const SolverConfig& cfg, SolveReport* report) {
  const int32_t n = A.n;
  if (int32_t(b.size()) != n)
    throw invalid_argument("cg_solve: rhs size mismatch");
  if (!(cfg.rel_tol > 0.0))
    throw invalid_argument("cg_solve: rel_tol must be positive");

  SolveReport rep;
  rep.unknowns = n;

  std::vector<double> x(static_cast<size_t>(n), 0.0);
  const double bnorm = std::sqrt(dot(b, b));
  if (bnorm == 0.0) {
    rep.converged = true;
    rep.precond_drop = 1.0;
    if (report) *report = rep;
    return x;
  }

  std::vector<double> dinv(static_cast<size_t>(n), 0.0);
  for (int32_t i = 0; i < n; ++i) {
    double d = 0.0;
    for (int64_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
      if (A.col[k] == i) d = A.val[k];
    if (!(d > 0.0)) {
      if (report) *report = rep;
      throw SolverFailure("operator has a non-positive diagonal entry", rep);
    }
    dinv[size_t(i)] = 1.0 / d;
  }

  const int64_t max_iter =
      cfg.max_iter > 0 ? cfg.max_iter
                       : int64_t(20.0 * std::sqrt(double(n))) + 1000;

  std::vector<double> r = b;
  std::vector<double> z(static_cast<size_t>(n));
  for (int32_t i = 0; i < n; ++i) z[size_t(i)] = dinv[size_t(i)] * r[size_t(i)];
  std::vector<double> p = z;
  std::vector<double> q(static_cast<size_t>(n));
  double rho = dot(r, z);
  const double rho0 = rho;
  double rho_prev_norm = std::sqrt(rho);
  if (cfg.keep_history) rep.history.push_back(rho_prev_norm);

  double rnorm2 = dot(r, r);
  const double target = cfg.rel_tol * bnorm;
  int refreshes = 0;

  while (rep.iterations < max_iter) {
    if (std::sqrt(rnorm2) <= target) {
      // recurrence residual may have drifted; confirm with a true one
      double rr = true_relres(A, x, b, bnorm, q);
      if (rr <= cfg.rel_tol) {
        rep.converged = true;
        rep.rel_residual = rr;
        break;
      }
      if (++refreshes > 5) {
        rep.rel_residual = rr;
        if (report) *report = rep;
        throw SolverFailure("residual stagnates above tolerance", rep);
      }
      A.matvec(x.data(), q.data());
      for (int32_t i = 0; i < n; ++i) r[size_t(i)] = b[size_t(i)] - q[size_t(i)];
      for (int32_t i = 0; i < n; ++i)
        z[size_t(i)] = dinv[size_t(i)] * r[size_t(i)];
      p = z;
      rho = dot(r, z);
      rnorm2 = dot(r, r);
      continue;
    }

    A.matvec(p.data(), q.data());
    const double pq = dot(p, q);
    if (!(pq > 0.0)) {
      if (report) *report = rep;
      throw SolverFailure("operator is not positive definite (p'Ap <= 0)",
                          rep);
    }
    const double alpha = rho / pq;
    for (int32_t i = 0; i < n; ++i) x[size_t(i)] += alpha * p[size_t(i)];
    for (int32_t i = 0; i < n; ++i) r[size_t(i)] -= alpha * q[size_t(i)];
    for (int32_t i = 0; i < n; ++i)
      z[size_t(i)] = dinv[size_t(i)] * r[size_t(i)];
    const double rho_next = dot(r, z);
    const double beta = rho_next / rho;
    for (int32_t i = 0; i < n; ++i)
      p[size_t(i)] = z[size_t(i)] + beta * p[size_t(i)];
    rho = rho_next;
    rnorm2 = dot(r, r);
    ++rep.iterations;

    const double rho_norm = std::sqrt(rho);
    if (rho_prev_norm > 0.0) {
      double up = rho_norm / rho_prev_norm;
      if (up > rep.worst_uptick) rep.worst_uptick = up;
      // the A-norm error decreases monotonically; the preconditioned
      // residual trends down with small transients (1.17 observed on
      // near-Neumann systems), so allow bounded per-step upticks
      assert(up <= 1.5 && "preconditioned residual uptick out of bounds");
    }
    rho_prev_norm = rho_norm;
    if (cfg.keep_history) rep.history.push_back(rho_norm);
  }

  if (!rep.converged) {
    if (std::sqrt(rnorm2) <= target) {
      double rr = true_relres(A, x, b, bnorm, q);
      if (rr <= cfg.rel_tol) {
        rep.converged = true;
        rep.rel_residual = rr;
      }
    }
    if (!rep.converged) {
      rep.rel_residual = true_relres(A, x, b, bnorm, q);
      if (report) *report = rep;
      throw SolverFailure("iteration cap reached before convergence", rep);
    }
  }

  rep.precond_drop = rho > 0.0 ? std::sqrt(rho0 / rho) : INFINITY;
  if (report) *report = rep;
  return x;
}

}  // namespace robinflux
