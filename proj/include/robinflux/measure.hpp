#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "robinflux/geometry.hpp"
#include "robinflux/green.hpp"
#include "robinflux/solve.hpp"

namespace robinflux {

// Harmonic measure as face weights for one pole.  Robin weights come from
// one Green solve (w_f = a * G(pole, owner) * sigma_f); Dirichlet weights
// from the pinned Green function's fluxes into the boundary layer,
// distributed over each pinned cell's faces by sigma share.
struct HarmonicMeasure {
  bool dirichlet = false;
  double a = 0.0;
  int32_t pole = -1;
  std::vector<double> w;  // per boundary face
  double total = 0.0;     // = 1 up to solver tolerance
};

HarmonicMeasure robin_harmonic_measure(const GridDomain& dom,
                                       const BoundaryMeasure& sigma, double a,
                                       const Point& pole,
                                       const SolverConfig& cfg = {});
HarmonicMeasure dirichlet_harmonic_measure_full(const GridDomain& dom,
                                                const BoundaryMeasure& sigma,
                                                const Point& pole,
                                                const SolverConfig& cfg = {});

// Dirichlet measure of a face set by the indicator-data route: pinned
// cells take the sigma-weighted mean of their faces' indicator values;
// returns the solution at X.  Agrees with the full-vector route exactly
// in the discrete algebra.
double dirichlet_harmonic_measure(const GridDomain& dom,
                                  const BoundaryMeasure& sigma,
                                  const Point& pole,
                                  const std::vector<int32_t>& faces,
                                  const SolverConfig& cfg = {});

double measure_of_faces(const HarmonicMeasure& hm,
                        const std::vector<int32_t>& faces);
double measure_of_ball(const GridDomain& dom, const HarmonicMeasure& hm,
                       const Point& q, double r);

// One sampled comparison; lhs/rhs meaning depends on the check.
struct SampleRow {
  Point q{};
  double r = 0.0;
  double lhs = 0.0, rhs = 0.0, ratio = 0.0;
  bool ok = false;
  bool skipped = false;
  bool clipped = false;
};

struct CheckReport {
  std::string name;
  double a = 0.0;
  double constant = 0.0;  // configured acceptance constant
  std::vector<SampleRow> rows;
  double worst = 0.0, best = 0.0;  // extreme ratios over retained rows
  double pass_fraction = 0.0;
  int64_t skipped = 0;
  bool pass = false;
};

// Lower bound on the measure of B(Q,r) seen from its corkscrew point,
// against min(1, a r^(2-n) sigma(B(Q,r))).
CheckReport bourgain_check(const GridDomain& dom, const BoundaryMeasure& sigma,
                           double a, int samples, double bound = 50.0,
                           uint64_t seed = 1, const SolverConfig& cfg = {});

// Two-sided equivalence of the measure of B(Q,r) with
// G(X, A_r(Q)) * r^(n-2) * min(1, a r^(2-n) sigma(B(Q,r))).
CheckReport greenhm_equiv_check(const GridDomain& dom,
                                const BoundaryMeasure& sigma, double a,
                                int samples, double constant = 50.0,
                                double far_factor = 4.0, uint64_t seed = 1,
                                const SolverConfig& cfg = {});

// omega(B(Q,2r)) <= C_d * omega(B(Q,r)) from a deep pole; the achieved
// constant (worst ratio) is the quantity compared across the a-grid.
CheckReport doubling_check(const GridDomain& dom, const BoundaryMeasure& sigma,
                           double a, int samples, double bound = 50.0,
                           uint64_t seed = 1, const SolverConfig& cfg = {},
                           double r_lo = 0.0, double r_hi = 0.0);

// Double ratio [w^X(E)/w^X(B)] / [w^Y(E)/w^Y(B)] for E inside B(Q,r) and
// far poles X, Y.
CheckReport change_of_pole_check(const GridDomain& dom,
                                 const BoundaryMeasure& sigma, double a,
                                 int samples, double constant = 50.0,
                                 uint64_t seed = 1,
                                 const SolverConfig& cfg = {});

// Ratio u/v of two far-data Robin measures inside B(Q,r), normalized by
// its value at the corkscrew point.
CheckReport boundary_comparison_check(const GridDomain& dom,
                                      const BoundaryMeasure& sigma, double a,
                                      int samples, double constant = 50.0,
                                      double ktilde = 4.0, uint64_t seed = 1,
                                      const SolverConfig& cfg = {});
// Single-configuration variant with caller-provided data sets; rejects
// sets supported inside B(Q, ktilde*r).
std::vector<SampleRow> boundary_comparison_at(
    const GridDomain& dom, const BoundaryMeasure& sigma, double a,
    int32_t q_face, double r, const std::vector<int32_t>& set_u,
    const std::vector<int32_t>& set_v, int probes, double constant = 50.0,
    double ktilde = 4.0, const SolverConfig& cfg = {});

// a*G(X0, P) against the density omega_D(B(P,r_P))/sigma(B(P,r_P)) at the
// critical scale r_P of P.
CheckReport smoothing_check(const GridDomain& dom,
                            const BoundaryMeasure& sigma, double a,
                            int samples, double constant = 50.0,
                            uint64_t seed = 1, const SolverConfig& cfg = {});

// Upper-envelope fit of log(omega ratio) against log(sigma ratio) over
// nested face sets: omega(E)/omega(B(P,s)) <= C (sigma(E)/sigma(B(P,s)))^theta.
struct AinftyReport {
  double a = 0.0;
  double theta = 0.0;
  double c_fit = 0.0;
  double theta_min = 0.0;
  std::vector<SampleRow> rows;  // lhs = sigma ratio, rhs = omega ratio
  int64_t skipped = 0;
  bool pass = false;
};
AinftyReport ainfty_diagnostic(const GridDomain& dom,
                               const BoundaryMeasure& sigma, double a,
                               int samples, double theta_min = 0.3,
                               uint64_t seed = 1,
                               const SolverConfig& cfg = {});

// Greedy maximal r-separated net over boundary face centers, in seeded
// shuffle order.  Every face lies within r (hence 2r) of some center.
struct CoverSpec {
  double r = 0.0;
  std::vector<int32_t> centers;  // face ids
  int overlap_bound = 0;         // max centers within 2r of any face
};
CoverSpec build_cover(const GridDomain& dom, double r, uint64_t seed);

// S = sum_i omega(B(c_i, 2r))^2 over the cover balls.
double makarov_entropy(const GridDomain& dom, const HarmonicMeasure& hm,
                       const CoverSpec& cover);

}  // namespace robinflux
