#pragma once

#include <cstdint>
#include <vector>

#include "robinflux/discretize.hpp"
#include "robinflux/geometry.hpp"
#include "robinflux/solve.hpp"

namespace robinflux {

// Absorption model: u = 1 on the source ball B(0,1), harmonic in between,
// Robin absorption (1/a) du/dnu + u = 0 on the outer boundary.  The total
// flow F(a) = a * integral of the boundary trace against sigma.
struct LungSolution {
  double a = 0.0;
  bool dirichlet = false;        // marks the a = infinity solution
  std::vector<double> field;     // one value per cell, 1 on the source
  double flux = 0.0;             // F(a), boundary form (exact in a)
  double ring_flux = 0.0;        // same flow metered at the source ring
  double energy = 0.0;           // u'Lu + a u'Mu, equals F(a) discretely
  SolveReport solve;
};

LungSolution solve_lung(const GridDomain& dom, const BoundaryMeasure& sigma,
                        double a, const SolverConfig& cfg = {});

// Fully absorbing limit: outer boundary cells pinned to 0.  flux holds the
// Dirichlet energy F(inf); ring_flux meters the source ring as cross-check.
LungSolution dirichlet_flux(const GridDomain& dom,
                            const BoundaryMeasure& sigma,
                            const SolverConfig& cfg = {});

// |F(a) - J_a(u_a)| / F(a); the two reduce to the same bilinear pairing
// against the pinned source, so this is solver-noise sized.
double energy_identity_residual(const LungSolution& sol);

// dF/da via the companion field w = du/da (source ring pinned to 0,
// Robin operator, boundary data -u_a).
struct FluxDerivative {
  double a = 0.0;
  double value = 0.0;        // F'(a) = trace_term + a * slope_term
  double trace_term = 0.0;   // integral of u_a dsigma
  double slope_term = 0.0;   // integral of w_a dsigma
  double w_max = 0.0;        // max over cells; theory says w <= 0
  std::vector<double> w;
  SolveReport solve;
};

FluxDerivative flux_derivative(const GridDomain& dom,
                               const BoundaryMeasure& sigma, double a,
                               const SolverConfig& cfg = {});

// The algebraic route to F(inf) - F(a): pair u_a against the Dirichlet
// solution's flux into the pinned boundary layer,
//   sum over pinned p of u_a(p) * h^(n-2) * sum of u_inf over p's neighbors.
// This is the discrete Green identity, so `pairing` matches the subtracted
// `direct` value up to solver noise.
struct FluxDifference {
  double a = 0.0;
  double pairing = 0.0;
  double direct = 0.0;
  double rel_gap = 0.0;
};

FluxDifference flux_difference(const GridDomain& dom,
                               const BoundaryMeasure& sigma, double a,
                               const SolverConfig& cfg = {});

struct FluxPoint {
  double a = 0.0;
  double f = 0.0;
  double f_gap = 0.0;    // F(inf) - F(a)
  double energy = 0.0;   // J_a(u_a)
};

struct FluxCurve {
  std::vector<FluxPoint> points;  // ascending in a
  double f_infinity = 0.0;
  double sigma_total = 0.0;
  double ell = 0.0;               // smallest smooth scale of the domain
  int monotone_violations = 0;    // adjacent pairs with F not increasing
  int cap_violations = 0;         // points with F >= F(inf)
};

// Solves every grid point plus the Dirichlet limit.  The grid must be
// positive ascending; with require_span it must cover at least
// [1e-2/sigma, 1e2*max(1/sigma, 1/ell)] so every regime is sampled.
FluxCurve flux_curve(const GridDomain& dom, const BoundaryMeasure& sigma,
                     const std::vector<double>& a_grid,
                     bool require_span = true, const SolverConfig& cfg = {});

// Regime classification of a computed curve.  Fit windows default to the
// theory boundaries (a <= 1/sigma Neumann, a >= 1/sigma plateau,
// a >= 4/ell Dahlberg) and may be overridden where a domain has no ell.
struct PhaseWindows {
  double neumann_max = 0.0;   // 0: use 1/sigma_total
  double plateau_min = 0.0;   // 0: use 1/sigma_total
  double dahlberg_min = 0.0;  // 0: use 4/ell (requires ell > 0)
};

struct PhaseReport {
  double neumann_slope = 0.0, neumann_intercept = 0.0;
  int neumann_points = 0;
  double plateau_lo = 0.0, plateau_hi = 0.0;  // range of F/F(inf) in window
  int plateau_points = 0;
  double dahlberg_slope = 0.0, dahlberg_intercept = 0.0;
  int dahlberg_points = 0;
  double a_break_sigma = 0.0;   // 1/sigma_total
  double a_break_ell = 0.0;     // 4/ell, 0 when no ell
  double fitted_break = 0.0;    // Neumann fit meets the plateau level
};

// Throws "InsufficientSpan" when any requested window holds < 3 points.
PhaseReport phase_transition_report(const FluxCurve& curve,
                                    const PhaseWindows& win = {});

// Intermediate-regime entropy comparison: for each a, the critical scale
// r_a (median of per-point rho over sampled boundary points) indexes a
// cover, and [F(inf)-F(a)] / [r_a^{2-n} S] should be a-stable, S being
// the Makarov 2-entropy of the Dirichlet measure on that cover.
struct EntropyRow {
  double a = 0.0;
  double r_a = 0.0;
  double f_gap = 0.0;
  double entropy = 0.0;
  double ratio = 0.0;
  double homog_fraction = 0.0;  // share of sampled Q with index in [1/4,4]
};

struct EntropyReport {
  bool empty_range = false;  // intermediate range shorter than half a decade
  std::vector<EntropyRow> rows;
  double ratio_lo = 0.0, ratio_hi = 0.0;
  double band = 0.0;  // ratio_hi / ratio_lo
  bool pass = false;  // band <= 100 over >= 5 rows
};

EntropyReport entropy_comparison(const GridDomain& dom,
                                 const BoundaryMeasure& sigma,
                                 const std::vector<double>& a_grid,
                                 int samples = 32, uint64_t seed = 1,
                                 const SolverConfig& cfg = {});

}  // namespace robinflux
