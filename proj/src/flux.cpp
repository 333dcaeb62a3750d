#include "robinflux/flux.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "robinflux/errors.hpp"
#include "robinflux/measure.hpp"
#include "robinflux/rng.hpp"

namespace robinflux {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// source cells must not own boundary faces, otherwise the pinned value
// contaminates the boundary form and F(a) = ring flux breaks
void check_source_clear(const std::vector<int32_t>& lung,
                        const std::vector<double>& bmass) {
  for (int32_t p : lung)
    if (bmass[size_t(p)] > 0.0)
      throw invalid_argument(
          "total-flow problem: source ball touches the outer boundary");
}

double ring_flow(const SparseOperator& L, const std::vector<double>& field,
                 const std::vector<int32_t>& lung) {
  std::vector<double> y(field.size());
  L.matvec(field.data(), y.data());
  double s = 0.0;
  for (int32_t p : lung) s += y[size_t(p)];
  return s;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// least squares slope/intercept of log(y) against log(x)
void loglog_fit(const std::vector<std::pair<double, double>>& pts,
                double* slope, double* intercept) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& p : pts) {
    double x = std::log(p.first), y = std::log(p.second);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  double n = double(pts.size());
  double den = n * sxx - sx * sx;
  *slope = (n * sxy - sx * sy) / den;
  *intercept = (sy - *slope * sx) / n;
}

}  // namespace

LungSolution solve_lung(const GridDomain& dom, const BoundaryMeasure& sigma,
                        double a, const SolverConfig& cfg) {
  if (!(a >= 0.0) || !std::isfinite(a))
    throw invalid_argument("solve_lung: absorption a must be finite and >= 0");
  std::vector<int32_t> lung = lung_source_cells(dom);
  std::vector<double> bmass = assemble_boundary_mass(dom, sigma);
  check_source_clear(lung, bmass);

  LungSolution sol;
  sol.a = a;
  if (a == 0.0) {
    // pure Neumann outside: u = 1 everywhere, nothing flows
    sol.field.assign(size_t(dom.cell_count()), 1.0);
    sol.solve.converged = true;
    sol.solve.unknowns = dom.cell_count() - int64_t(lung.size());
    return sol;
  }

  SparseOperator L = assemble_stiffness(dom);
  SparseOperator A = robin_operator(L, bmass, a);
  ReducedSystem red = reduce_pinned(dom, A, lung, 1.0);
  std::vector<double> u_free = cg_solve(red.A, red.rhs_base, cfg, &sol.solve);
  sol.field = red.expand(u_free);

  for (size_t f = 0; f < dom.faces.size(); ++f)
    sol.flux += sigma.w[f] * sol.field[size_t(dom.faces[f].owner)];
  sol.flux *= a;

  double m = 0.0;
  for (int32_t c = 0; c < dom.cell_count(); ++c)
    m += bmass[size_t(c)] * sol.field[size_t(c)] * sol.field[size_t(c)];
  sol.energy = L.quad(sol.field) + a * m;
  sol.ring_flux = ring_flow(L, sol.field, lung);
  return sol;
}

LungSolution dirichlet_flux(const GridDomain& dom,
                            const BoundaryMeasure& sigma,
                            const SolverConfig& cfg) {
  std::vector<int32_t> lung = lung_source_cells(dom);
  std::vector<double> bmass = assemble_boundary_mass(dom, sigma);
  check_source_clear(lung, bmass);
  std::vector<int32_t> outer = boundary_adjacent_cells(dom);

  std::vector<int32_t> pinned;
  std::vector<double> values;
  pinned.reserve(lung.size() + outer.size());
  for (int32_t p : lung) {
    pinned.push_back(p);
    values.push_back(1.0);
  }
  for (int32_t p : outer) {
    pinned.push_back(p);
    values.push_back(0.0);
  }

  SparseOperator L = assemble_stiffness(dom);
  ReducedSystem red = reduce_pinned(dom, L, pinned, values);

  LungSolution sol;
  sol.a = std::numeric_limits<double>::infinity();
  sol.dirichlet = true;
  std::vector<double> u_free = cg_solve(red.A, red.rhs_base, cfg, &sol.solve);
  sol.field = red.expand(u_free);
  sol.flux = L.quad(sol.field);
  sol.energy = sol.flux;
  sol.ring_flux = ring_flow(L, sol.field, lung);
  return sol;
}

double energy_identity_residual(const LungSolution& sol) {
  double scale = std::max(std::fabs(sol.flux), 1e-300);
  return std::fabs(sol.flux - sol.energy) / scale;
}

FluxDerivative flux_derivative(const GridDomain& dom,
                               const BoundaryMeasure& sigma, double a,
                               const SolverConfig& cfg) {
  if (!(a > 0.0) || !std::isfinite(a))
    throw invalid_argument("flux_derivative: needs finite a > 0");
  LungSolution base = solve_lung(dom, sigma, a, cfg);
  std::vector<int32_t> lung = lung_source_cells(dom);
  std::vector<double> bmass = assemble_boundary_mass(dom, sigma);

  SparseOperator L = assemble_stiffness(dom);
  SparseOperator A = robin_operator(L, bmass, a);
  // w = du/da solves the same Robin system with data -M u, zero on the source
  ReducedSystem red = reduce_pinned(dom, A, lung, 0.0);
  std::vector<double> rhs = red.rhs_base;
  for (size_t i = 0; i < red.cell_of_free.size(); ++i) {
    int32_t c = red.cell_of_free[i];
    rhs[i] -= bmass[size_t(c)] * base.field[size_t(c)];
  }

  FluxDerivative d;
  d.a = a;
  std::vector<double> w_free = cg_solve(red.A, rhs, cfg, &d.solve);
  d.w = red.expand(w_free);

  d.w_max = -std::numeric_limits<double>::infinity();
  for (double wv : d.w) d.w_max = std::max(d.w_max, wv);
  for (int32_t c = 0; c < dom.cell_count(); ++c) {
    d.trace_term += bmass[size_t(c)] * base.field[size_t(c)];
    d.slope_term += bmass[size_t(c)] * d.w[size_t(c)];
  }
  d.value = d.trace_term + a * d.slope_term;
  return d;
}

FluxDifference flux_difference(const GridDomain& dom,
                               const BoundaryMeasure& sigma, double a,
                               const SolverConfig& cfg) {
  LungSolution ua = solve_lung(dom, sigma, a, cfg);
  LungSolution ui = dirichlet_flux(dom, sigma, cfg);

  // discrete Green identity: F(inf) - F(a) = -sum_p u_a(p) (L u_inf)_p over
  // the pinned outer layer, and (L u_inf)_p there collapses to the neighbor
  // sum since u_inf(p) = 0
  double hpow = std::pow(dom.h, dom.dim - 2);
  FluxDifference out;
  out.a = a;
  for (int32_t p : boundary_adjacent_cells(dom)) {
    int64_t g = dom.cells[size_t(p)];
    int ix = int(g % dom.n[0]);
    int iy = int((g / dom.n[0]) % dom.n[1]);
    int iz = int(g / (int64_t(dom.n[0]) * dom.n[1]));
    double nbr = 0.0;
    for (int ax = 0; ax < dom.dim; ++ax) {
      for (int dir = -1; dir <= 1; dir += 2) {
        int c[3] = {ix, iy, iz};
        c[ax] += dir;
        if (c[ax] < 0 || c[ax] >= dom.n[ax]) continue;
        int64_t gn = dom.grid_index(c[0], c[1], c[2]);
        if (!dom.interior(gn)) continue;
        nbr += ui.field[size_t(dom.cell_at[size_t(gn)])];
      }
    }
    out.pairing += ua.field[size_t(p)] * hpow * nbr;
  }
  out.direct = ui.flux - ua.flux;
  out.rel_gap = std::fabs(out.pairing - out.direct) /
                std::max(std::fabs(out.direct), 1e-300);
  return out;
}

FluxCurve flux_curve(const GridDomain& dom, const BoundaryMeasure& sigma,
                     const std::vector<double>& a_grid, bool require_span,
                     const SolverConfig& cfg) {
  if (a_grid.empty()) throw invalid_argument("flux_curve: empty a grid");
  for (size_t i = 0; i < a_grid.size(); ++i) {
    if (!(a_grid[i] > 0.0) || !std::isfinite(a_grid[i]))
      throw invalid_argument("flux_curve: a grid must be positive and finite");
    if (i > 0 && a_grid[i] <= a_grid[i - 1])
      throw invalid_argument("flux_curve: a grid must be strictly ascending");
  }

  FluxCurve curve;
  curve.sigma_total = sigma.total;
  curve.ell = dom.meta.ell;
  if (require_span) {
    double lo = 1e-2 / sigma.total;
    double hi = 1e2 * std::max(1.0 / sigma.total, 1.0 / curve.ell);
    if (a_grid.front() > lo * (1 + 1e-9) || a_grid.back() < hi * (1 - 1e-9))
      throw invalid_argument("flux_curve: a grid [" + fmt(a_grid.front()) +
                             ", " + fmt(a_grid.back()) +
                             "] does not span the regime range [" + fmt(lo) +
                             ", " + fmt(hi) + "]");
  }

  curve.f_infinity = dirichlet_flux(dom, sigma, cfg).flux;
  for (double a : a_grid) {
    LungSolution sol = solve_lung(dom, sigma, a, cfg);
    FluxPoint p;
    p.a = a;
    p.f = sol.flux;
    p.f_gap = curve.f_infinity - sol.flux;
    p.energy = sol.energy;
    curve.points.push_back(p);
  }
  for (size_t i = 0; i < curve.points.size(); ++i) {
    if (i > 0 && curve.points[i].f <= curve.points[i - 1].f)
      ++curve.monotone_violations;
    if (curve.points[i].f >= curve.f_infinity) ++curve.cap_violations;
  }
  return curve;
}

PhaseReport phase_transition_report(const FluxCurve& curve,
                                    const PhaseWindows& win) {
  if (curve.points.empty())
    throw invalid_argument("phase_transition_report: empty curve");
  if (!(curve.sigma_total > 0.0) || !(curve.f_infinity > 0.0))
    throw invalid_argument("phase_transition_report: curve lacks totals");

  PhaseReport rep;
  rep.a_break_sigma = 1.0 / curve.sigma_total;
  rep.a_break_ell = curve.ell > 0.0 ? 4.0 / curve.ell : 0.0;
  double neumann_max =
      win.neumann_max > 0.0 ? win.neumann_max : rep.a_break_sigma;
  double plateau_min =
      win.plateau_min > 0.0 ? win.plateau_min : rep.a_break_sigma;
  double dahlberg_min =
      win.dahlberg_min > 0.0 ? win.dahlberg_min : rep.a_break_ell;
  if (!(dahlberg_min > 0.0))
    throw invalid_argument(
        "phase_transition_report: no Dahlberg threshold (domain has no ell "
        "and none was given)");

  auto short_span = [](const char* name, double lo, double hi, size_t k) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "InsufficientSpan: %s window [%.6g, %.6g] holds %zu grid "
                  "points, need 3",
                  name, lo, hi, k);
    return invalid_argument(buf);
  };

  std::vector<std::pair<double, double>> pts;
  for (const FluxPoint& p : curve.points)
    if (p.a <= neumann_max && p.f > 0.0) pts.push_back({p.a, p.f});
  if (pts.size() < 3) throw short_span("Neumann", 0.0, neumann_max, pts.size());
  rep.neumann_points = int(pts.size());
  loglog_fit(pts, &rep.neumann_slope, &rep.neumann_intercept);

  std::vector<double> ratios;
  for (const FluxPoint& p : curve.points)
    if (p.a >= plateau_min && p.a <= dahlberg_min)
      ratios.push_back(p.f / curve.f_infinity);
  if (ratios.size() < 3)
    throw short_span("plateau", plateau_min, dahlberg_min, ratios.size());
  rep.plateau_points = int(ratios.size());
  rep.plateau_lo = *std::min_element(ratios.begin(), ratios.end());
  rep.plateau_hi = *std::max_element(ratios.begin(), ratios.end());

  pts.clear();
  for (const FluxPoint& p : curve.points)
    if (p.a >= dahlberg_min && p.f_gap > 0.0) pts.push_back({p.a, p.f_gap});
  if (pts.size() < 3)
    throw short_span("Dahlberg", dahlberg_min,
                     std::numeric_limits<double>::infinity(), pts.size());
  rep.dahlberg_points = int(pts.size());
  loglog_fit(pts, &rep.dahlberg_slope, &rep.dahlberg_intercept);

  // where the low-a power law meets the plateau level
  double level = curve.f_infinity * median_of(ratios);
  if (rep.neumann_slope != 0.0)
    rep.fitted_break = std::exp(
        (std::log(level) - rep.neumann_intercept) / rep.neumann_slope);
  return rep;
}

EntropyReport entropy_comparison(const GridDomain& dom,
                                 const BoundaryMeasure& sigma,
                                 const std::vector<double>& a_grid,
                                 int samples, uint64_t seed,
                                 const SolverConfig& cfg) {
  if (samples < 4)
    throw invalid_argument("entropy_comparison: needs >= 4 samples");
  if (a_grid.empty()) throw invalid_argument("entropy_comparison: empty grid");

  EntropyReport rep;
  double dpow = std::pow(dom.diam, 2.0 - dom.dim);
  // intermediate regime needs at least half a decade between the outer
  // homogenization scale and the smallest smooth scale
  if (12.0 * dom.meta.ell > sigma.total * dpow) {
    rep.empty_range = true;
    return rep;
  }
  double a_lo = 1.0 / (sigma.total * dpow);
  double a_hi = 1.0 / (4.0 * dom.meta.ell);
  for (double a : a_grid)
    if (a < a_lo * (1 - 1e-9) || a > a_hi * (1 + 1e-9))
      throw invalid_argument("entropy_comparison: a = " + fmt(a) +
                             " outside the intermediate range [" + fmt(a_lo) +
                             ", " + fmt(a_hi) + "]");

  double f_inf = dirichlet_flux(dom, sigma, cfg).flux;
  HarmonicMeasure hm =
      dirichlet_harmonic_measure_full(dom, sigma, Point{0, 0, 0}, cfg);

  Rng master(seed);
  for (double a : a_grid) {
    Rng rng = master.fork();
    std::vector<double> rhos;
    int homog = 0;
    for (int s = 0; s < samples; ++s) {
      const BoundaryFace& f =
          dom.faces[size_t(rng.below(uint64_t(dom.faces.size())))];
      rhos.push_back(critical_rho_x(dom, sigma, a, f.center).rho);
    }
    EntropyRow row;
    row.a = a;
    row.r_a = median_of(rhos);
    if (row.r_a < 4.0 * dom.h)
      throw invalid_argument("entropy_comparison: critical scale " +
                             fmt(row.r_a) + " at a = " + fmt(a) +
                             " is unresolved (below 4h)");
    // how uniformly the boundary index sits near 1 at the median scale
    Rng hrng = rng.fork();
    for (int s = 0; s < samples; ++s) {
      const BoundaryFace& f =
          dom.faces[size_t(hrng.below(uint64_t(dom.faces.size())))];
      double I = index_I(dom, sigma, a, f.center, row.r_a);
      if (I >= 0.25 && I <= 4.0) ++homog;
    }
    row.homog_fraction = double(homog) / samples;

    row.f_gap = f_inf - solve_lung(dom, sigma, a, cfg).flux;
    CoverSpec cover = build_cover(dom, row.r_a, rng.next());
    row.entropy = makarov_entropy(dom, hm, cover);
    if (!(row.entropy > 0.0))
      throw internal_error("entropy_comparison: vanishing cover entropy");
    row.ratio = row.f_gap / (std::pow(row.r_a, 2.0 - dom.dim) * row.entropy);
    rep.rows.push_back(row);
  }

  rep.ratio_lo = rep.ratio_hi = rep.rows.front().ratio;
  for (const EntropyRow& r : rep.rows) {
    rep.ratio_lo = std::min(rep.ratio_lo, r.ratio);
    rep.ratio_hi = std::max(rep.ratio_hi, r.ratio);
  }
  rep.band = rep.ratio_hi / std::max(rep.ratio_lo, 1e-300);
  rep.pass = !rep.rows.empty() && rep.band <= 100.0;
  return rep;
}

}  // namespace robinflux
