#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "robinflux/discretize.hpp"
#include "robinflux/errors.hpp"

namespace robinflux {

struct SolverConfig {
  double rel_tol = 1e-10;     // on the true residual, relative to |b|
  int64_t max_iter = 0;       // 0 picks 20*sqrt(n) + 1000
  bool keep_history = false;  // record sqrt(r' D^-1 r) per iteration
};

struct SolveReport {
  int64_t iterations = 0;
  int64_t unknowns = 0;
  double rel_residual = 0.0;
  double precond_drop = 0.0;   // first/last preconditioned residual norm
  double worst_uptick = 1.0;   // max ratio of consecutive precond norms
  bool converged = false;
  std::vector<double> history;
};

// solver failures carry the iteration report for diagnostics
class SolverFailure : public Error {
 public:
  SolverFailure(const std::string& msg, SolveReport rep)
      : Error(ErrorKind::solver, msg), report(std::move(rep)) {}
  SolveReport report;
};

// Jacobi-preconditioned conjugate gradients.  Fixed summation order, so
// repeated runs of one binary give bit-identical fields.  Throws
// SolverFailure when the iteration cap is hit or the operator turns out
// not to be positive definite.
std::vector<double> cg_solve(const SparseOperator& A,
                             const std::vector<double>& b,
                             const SolverConfig& cfg = {},
                             SolveReport* report = nullptr);

}  // namespace robinflux
