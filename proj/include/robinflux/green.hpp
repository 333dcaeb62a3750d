#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "robinflux/discretize.hpp"
#include "robinflux/geometry.hpp"
#include "robinflux/solve.hpp"

namespace robinflux {

// Discrete Green function for one pole: (L + aM) g = e_Y, or the pinned
// variant for the Dirichlet case (extended by zero on pinned cells).
struct GreenField {
  std::vector<double> values;  // per interior cell
  int32_t pole = -1;           // cell id of the snapped pole
  double a = 0.0;              // INFINITY marks the Dirichlet field
  bool dirichlet = false;
  // a * sum_f sigma_f * values[owner(f)]; equals 1 up to solver tolerance
  // for Robin fields since the stiffness annihilates constants; NaN for
  // Dirichlet fields
  double flux_certificate = std::numeric_limits<double>::quiet_NaN();
  SolveReport solve;
};

GreenField robin_green(const GridDomain& dom, const BoundaryMeasure& sigma,
                       double a, const Point& pole,
                       const SolverConfig& cfg = {});
GreenField dirichlet_green(const GridDomain& dom, const Point& pole,
                           const SolverConfig& cfg = {});

// sum over boundary faces of sigma_f * field[owner(f)], fixed face order
double green_trace_sum(const GridDomain& dom, const BoundaryMeasure& sigma,
                       const GreenField& gf);

// Radial profile of the Green function on B(0,R) with the pole at the
// center: c_n/x^(n-2) - c_n/R^(n-2) + (n-2)c_n/(a R^(n-1)), where
// c_n = 1/((n-2) |S^(n-1)|).  Pass a = INFINITY for the Dirichlet variant.
double ball_oracle_green(int n, double R, double a, double x);

// Pointwise order of the Green family in a, against the Dirichlet floor.
struct MonotonicityReport {
  std::vector<double> a_list;
  int64_t violations = 0;
  std::vector<int32_t> violating_cells;   // first few offenders
  std::vector<double> pair_margin;        // min margin per adjacent a pair
  double min_margin_adjacent = 0.0;       // min over pairs
  double min_margin_dirichlet = 0.0;      // min of smallest-a field vs G_D
  bool pass = false;
};
MonotonicityReport monotonicity_check(const GridDomain& dom,
                                      const BoundaryMeasure& sigma,
                                      const Point& pole,
                                      const std::vector<double>& a_list,
                                      const SolverConfig& cfg = {});

// One sampled pair of a regime check.
struct RegimePair {
  Point x{}, y{};
  double dist = 0.0;
  double delta_x = 0.0, delta_y = 0.0;
  double gr = 0.0;  // Robin Green value at the pair
  double gd = std::numeric_limits<double>::quiet_NaN();  // Dirichlet value
                                                          // at corkscrews
  double ratio = 0.0;   // measured over predicted
  bool close = false;   // Neumann check: |x-y| below the critical scale
  bool deep = false;    // Dirichlet check: both deltas >= dist
  bool sub_x = false;   // corkscrew substitution happened for x
  bool sub_y = false;
};

struct RegimeCheckReport {
  std::string regime;  // "neumann" or "dirichlet"
  double a = 0.0;
  double constant = 0.0;  // acceptance constant C
  std::vector<RegimePair> pairs;
  double min_ratio = 0.0, max_ratio = 0.0;
  int64_t violations = 0;
  bool pass = false;
};

// Scale-free two-sided bounds on G_R in the small-a regime: far pairs
// compare against the critical scale, close pairs against free-space
// decay.  Requires a * sigma_total <= diam^(n-2).
RegimeCheckReport check_neumann_regime(const GridDomain& dom,
                                       const BoundaryMeasure& sigma, double a,
                                       const Point& pole, int samples,
                                       double constant = 20.0,
                                       uint64_t seed = 1,
                                       const SolverConfig& cfg = {});

// Large-a regime: G_R(X,Y) compared against the Dirichlet field evaluated
// at corkscrew substitutes; deep pairs additionally satisfy the two-sided
// bound with no substitution.  Requires a * sigma_total >= diam^(n-2).
RegimeCheckReport check_dirichlet_regime(const GridDomain& dom,
                                         const BoundaryMeasure& sigma,
                                         double a, int samples,
                                         double constant = 20.0,
                                         uint64_t seed = 1,
                                         const SolverConfig& cfg = {});

}  // namespace robinflux
