#include "robinflux/green.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "robinflux/errors.hpp"
#include "robinflux/rng.hpp"

namespace robinflux {

namespace {

double unit_sphere_area(int n) {
  return 2.0 * std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n);
}

Error wrong_regime(const std::string& msg) {
  return Error(ErrorKind::invalid_argument, "WrongRegime: " + msg);
}

double dist3(const Point& p, const Point& q) {
  double s = 0.0;
  for (int k = 0; k < 3; ++k) s += (p[k] - q[k]) * (p[k] - q[k]);
  return std::sqrt(s);
}

// corkscrew substitute A for a point whose boundary distance is below r:
// the deepest cell of B(Q, r) near the nearest boundary point Q.  The
// radius gets a 2h floor (and doubles while the hit cell still owns a
// boundary face) so the substitute is usable as a Dirichlet pole; voxel
// resolution only shifts it by a bounded factor.
int32_t corkscrew_cell(const GridDomain& dom, const Point& q, double r,
                       const std::vector<int32_t>& free_of_cell) {
  double rr = std::max(r, 2.0 * dom.h);
  for (int attempt = 0; attempt < 4; ++attempt) {
    CorkscrewPoint cp = corkscrew_point(dom, q, rr);
    if (free_of_cell[size_t(cp.cell)] >= 0) return cp.cell;
    rr *= 2.0;
  }
  throw internal_error("corkscrew substitute is still boundary-pinned");
}

}  // namespace

GreenField robin_green(const GridDomain& dom, const BoundaryMeasure& sigma,
                       double a, const Point& pole, const SolverConfig& cfg) {
  if (!(a > 0.0) || !std::isfinite(a))
    throw invalid_argument("robin_green needs finite a > 0");
  GreenField gf;
  gf.a = a;
  gf.pole = dom.cell_near(pole);
  SparseOperator L = assemble_stiffness(dom);
  SparseOperator A = robin_operator(L, assemble_boundary_mass(dom, sigma), a);
  std::vector<double> b(size_t(dom.cell_count()), 0.0);
  b[size_t(gf.pole)] = 1.0;
  gf.values = cg_solve(A, b, cfg, &gf.solve);
  gf.flux_certificate = a * green_trace_sum(dom, sigma, gf);
  return gf;
}

GreenField dirichlet_green(const GridDomain& dom, const Point& pole,
                           const SolverConfig& cfg) {
  GreenField gf;
  gf.dirichlet = true;
  gf.a = INFINITY;
  gf.pole = dom.cell_near(pole);
  SparseOperator L = assemble_stiffness(dom);
  ReducedSystem R = dirichlet_system(dom, L);
  if (R.free_of_cell[size_t(gf.pole)] < 0)
    throw invalid_argument("dirichlet_green: pole cell is boundary-pinned");
  std::vector<double> b(size_t(R.A.n), 0.0);
  b[size_t(R.free_of_cell[size_t(gf.pole)])] = 1.0;
  std::vector<double> uf = cg_solve(R.A, b, cfg, &gf.solve);
  gf.values = R.expand(uf);
  return gf;
}

double green_trace_sum(const GridDomain& dom, const BoundaryMeasure& sigma,
                       const GreenField& gf) {
  double s = 0.0;
  for (size_t f = 0; f < dom.faces.size(); ++f)
    s += sigma.w[f] * gf.values[size_t(dom.faces[f].owner)];
  return s;
}

double ball_oracle_green(int n, double R, double a, double x) {
  if (n < 3) throw invalid_argument("ball oracle needs n >= 3");
  if (!(R > 0.0)) throw invalid_argument("ball oracle needs R > 0");
  if (!(x > 0.0) || x > R)
    throw invalid_argument("ball oracle needs 0 < x <= R");
  const bool dirichlet = std::isinf(a) && a > 0.0;
  if (!dirichlet && (!(a > 0.0) || !std::isfinite(a)))
    throw invalid_argument("ball oracle needs a > 0 or a = infinity");
  const double cn = 1.0 / ((n - 2) * unit_sphere_area(n));
  double v = cn * std::pow(x, 2.0 - n) - cn * std::pow(R, 2.0 - n);
  if (!dirichlet) v += (n - 2) * cn / (a * std::pow(R, n - 1.0));
  return v;
}

MonotonicityReport monotonicity_check(const GridDomain& dom,
                                      const BoundaryMeasure& sigma,
                                      const Point& pole,
                                      const std::vector<double>& a_list,
                                      const SolverConfig& cfg) {
  if (a_list.size() < 2)
    throw invalid_argument("monotonicity check needs at least two a values");
  for (size_t k = 1; k < a_list.size(); ++k)
    if (!(a_list[k] > a_list[k - 1]))
      throw invalid_argument("a values must be strictly increasing");

  MonotonicityReport rep;
  rep.a_list = a_list;

  std::vector<GreenField> fields;
  fields.reserve(a_list.size());
  for (double a : a_list) fields.push_back(robin_green(dom, sigma, a, pole, cfg));
  GreenField gd = dirichlet_green(dom, pole, cfg);
  const int32_t pole_cell = fields.front().pole;

  auto note_violation = [&rep](int32_t cell) {
    ++rep.violations;
    if (rep.violating_cells.size() < 32) rep.violating_cells.push_back(cell);
  };

  rep.min_margin_adjacent = INFINITY;
  for (size_t k = 0; k + 1 < fields.size(); ++k) {
    double mn = INFINITY;
    for (int32_t c = 0; c < dom.cell_count(); ++c) {
      if (c == pole_cell) continue;
      double m = fields[k].values[size_t(c)] - fields[k + 1].values[size_t(c)];
      mn = std::min(mn, m);
      if (!(m > 0.0)) note_violation(c);
    }
    rep.pair_margin.push_back(mn);
    rep.min_margin_adjacent = std::min(rep.min_margin_adjacent, mn);
  }

  rep.min_margin_dirichlet = INFINITY;
  for (size_t k = 0; k < fields.size(); ++k)
    for (int32_t c = 0; c < dom.cell_count(); ++c) {
      if (c == pole_cell) continue;
      double m = fields[k].values[size_t(c)] - gd.values[size_t(c)];
      rep.min_margin_dirichlet = std::min(rep.min_margin_dirichlet, m);
      if (!(m > 0.0)) note_violation(c);
    }

  rep.pass = rep.violations == 0;
  return rep;
}

RegimeCheckReport check_neumann_regime(const GridDomain& dom,
                                       const BoundaryMeasure& sigma, double a,
                                       const Point& pole, int samples,
                                       double constant, uint64_t seed,
                                       const SolverConfig& cfg) {
  if (samples < 1) throw invalid_argument("need at least one sample");
  if (!(constant > 1.0)) throw invalid_argument("acceptance constant must exceed 1");
  const int n = dom.dim;
  if (!(a * sigma.total <= std::pow(dom.diam, n - 2)))
    throw wrong_regime("a*sigma exceeds diam^(n-2), not the small-a regime");

  const double rho = critical_rho_global(a, sigma.total, n);
  GreenField gf = robin_green(dom, sigma, a, pole, cfg);
  const Point yc = dom.cell_center(gf.pole);

  RegimeCheckReport rep;
  rep.regime = "neumann";
  rep.a = a;
  rep.constant = constant;

  Rng rng(seed);
  const double far_min = std::max(rho, 3.0 * dom.h);
  const double close_min = 3.0 * dom.h;
  const int per_branch = std::max(1, samples / 2);
  for (int branch = 0; branch < 2; ++branch) {
    const bool close = branch == 1;
    int got = 0;
    for (int tries = 0; tries < 20000 && got < per_branch; ++tries) {
      int32_t c = int32_t(rng.below(uint64_t(dom.cell_count())));
      if (c == gf.pole) continue;
      Point x = dom.cell_center(c);
      double d = dist3(x, yc);
      if (close) {
        if (d < close_min || d > rho) continue;
      } else {
        if (d < far_min) continue;
      }
      RegimePair pr;
      pr.x = x;
      pr.y = yc;
      pr.dist = d;
      pr.delta_x = dom.delta[size_t(c)];
      pr.delta_y = dom.delta[size_t(gf.pole)];
      pr.gr = gf.values[size_t(c)];
      pr.close = close;
      const double scale = close ? d : rho;
      pr.ratio = pr.gr * std::pow(scale, n - 2.0);
      rep.pairs.push_back(pr);
      ++got;
    }
  }
  if (rep.pairs.empty())
    throw invalid_argument("no admissible sample points for either branch");

  rep.min_ratio = INFINITY;
  rep.max_ratio = -INFINITY;
  for (const auto& pr : rep.pairs) {
    rep.min_ratio = std::min(rep.min_ratio, pr.ratio);
    rep.max_ratio = std::max(rep.max_ratio, pr.ratio);
    if (!(pr.ratio >= 1.0 / constant && pr.ratio <= constant) ||
        !std::isfinite(pr.ratio))
      ++rep.violations;
  }
  rep.pass = rep.violations == 0;
  return rep;
}

RegimeCheckReport check_dirichlet_regime(const GridDomain& dom,
                                         const BoundaryMeasure& sigma,
                                         double a, int samples,
                                         double constant, uint64_t seed,
                                         const SolverConfig& cfg) {
  if (samples < 1) throw invalid_argument("need at least one sample");
  if (!(constant > 1.0)) throw invalid_argument("acceptance constant must exceed 1");
  const int n = dom.dim;
  if (!(a * sigma.total >= std::pow(dom.diam, n - 2)))
    throw wrong_regime("a*sigma below diam^(n-2), not the large-a regime");

  SparseOperator L = assemble_stiffness(dom);
  ReducedSystem R = dirichlet_system(dom, L);

  RegimeCheckReport rep;
  rep.regime = "dirichlet";
  rep.a = a;
  rep.constant = constant;

  Rng rng(seed);
  const int n_poles = std::max(1, std::min(4, samples / 6));
  const int per_pole = (samples + n_poles - 1) / n_poles;

  std::map<int32_t, GreenField> gd_cache;  // keyed by pole cell
  auto gd_field = [&](int32_t cell) -> const GreenField& {
    auto it = gd_cache.find(cell);
    if (it == gd_cache.end())
      it = gd_cache.emplace(cell, dirichlet_green(dom, dom.cell_center(cell), cfg))
               .first;
    return it->second;
  };

  auto sample_free_cell = [&]() -> int32_t {
    for (int tries = 0; tries < 20000; ++tries) {
      int32_t c = int32_t(rng.below(uint64_t(dom.cell_count())));
      if (R.free_of_cell[size_t(c)] >= 0) return c;
    }
    throw internal_error("could not sample an unpinned cell");
  };

  for (int pi = 0; pi < n_poles; ++pi) {
    int32_t yc = sample_free_cell();
    Point y = dom.cell_center(yc);
    GreenField gr = robin_green(dom, sigma, a, y, cfg);
    const GreenField& gd_y = gd_field(yc);
    CriticalRhoX rho_y = critical_rho_x(dom, sigma, a, y);

    int got = 0;
    for (int tries = 0; tries < 20000 && got < per_pole; ++tries) {
      int32_t xc = sample_free_cell();
      if (xc == yc) continue;
      Point x = dom.cell_center(xc);
      double d = dist3(x, y);
      if (d < 3.0 * dom.h) continue;

      RegimePair pr;
      pr.x = x;
      pr.y = y;
      pr.dist = d;
      pr.delta_x = dom.delta[size_t(xc)];
      pr.delta_y = dom.delta[size_t(yc)];
      pr.gr = gr.values[size_t(xc)];

      CriticalRhoX rho_x = critical_rho_x(dom, sigma, a, x);
      double r_x = std::min(d / 10.0, rho_x.rho);
      double r_y = std::min(d / 10.0, rho_y.rho);
      int32_t ax = xc, ay = yc;
      if (pr.delta_x < r_x) {
        ax = corkscrew_cell(dom, rho_x.q, r_x, R.free_of_cell);
        pr.sub_x = ax != xc;
      }
      if (pr.delta_y < r_y) {
        ay = corkscrew_cell(dom, rho_y.q, r_y, R.free_of_cell);
        pr.sub_y = ay != yc;
      }
      const GreenField& gd_a = gd_field(ay);
      pr.gd = gd_a.values[size_t(ax)];
      pr.ratio = pr.gr / pr.gd;
      pr.deep = pr.delta_x >= d && pr.delta_y >= d;
      rep.pairs.push_back(pr);
      ++got;

      if (!(pr.ratio >= 1.0 / constant && pr.ratio <= constant) ||
          !std::isfinite(pr.ratio))
        ++rep.violations;
      // pointwise floor at the sampled pair itself (no substitution)
      double gd_xy = gd_y.values[size_t(xc)];
      if (pr.gr < gd_xy * (1.0 - 1e-8) - 1e-12) ++rep.violations;
      if (pr.deep) {
        // both substitutes are the points themselves here, so this is
        // the two-sided medium-range form
        if (!(pr.gr <= constant * gd_xy) || pr.gr < gd_xy * (1.0 - 1e-8))
          ++rep.violations;
      }
    }
  }
  if (rep.pairs.empty()) throw invalid_argument("no admissible sample pairs");

  rep.min_ratio = INFINITY;
  rep.max_ratio = -INFINITY;
  for (const auto& pr : rep.pairs) {
    rep.min_ratio = std::min(rep.min_ratio, pr.ratio);
    rep.max_ratio = std::max(rep.max_ratio, pr.ratio);
  }
  rep.pass = rep.violations == 0;
  return rep;
}

}  // namespace robinflux
