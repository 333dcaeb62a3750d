#include "robinflux/measure.hpp"

#include <algorithm>
#include <cmath>

#include "robinflux/discretize.hpp"
#include "robinflux/errors.hpp"
#include "robinflux/rng.hpp"

namespace robinflux {

namespace {

double dist3(const Point& p, const Point& q) {
  double s = 0.0;
  for (int k = 0; k < 3; ++k) s += (p[k] - q[k]) * (p[k] - q[k]);
  return std::sqrt(s);
}

int32_t deepest_cell(const GridDomain& dom) {
  int32_t best = 0;
  for (int32_t c = 1; c < dom.cell_count(); ++c)
    if (dom.delta[size_t(c)] > dom.delta[size_t(best)]) best = c;
  return best;
}

// per-owner total sigma weight, for distributing cell masses over faces
std::vector<double> owner_sigma(const GridDomain& dom,
                                const BoundaryMeasure& sigma) {
  std::vector<double> s(size_t(dom.cell_count()), 0.0);
  for (size_t f = 0; f < dom.faces.size(); ++f)
    s[size_t(dom.faces[f].owner)] += sigma.w[f];
  return s;
}

void finalize(CheckReport& rep) {
  rep.worst = INFINITY;
  rep.best = -INFINITY;
  int64_t kept = 0, ok = 0;
  for (const auto& row : rep.rows) {
    if (row.skipped) continue;
    ++kept;
    if (row.ok) ++ok;
    rep.worst = std::min(rep.worst, row.ratio);
    rep.best = std::max(rep.best, row.ratio);
  }
  if (kept == 0) throw invalid_argument(rep.name + ": no admissible samples");
  rep.pass_fraction = double(ok) / double(kept);
  rep.pass = rep.pass_fraction >= 0.95;
}

double log_uniform_r(Rng& rng, double lo, double hi) {
  if (!(hi > lo)) return lo;
  return rng.log_uniform(lo, hi);
}

}  // namespace

HarmonicMeasure robin_harmonic_measure(const GridDomain& dom,
                                       const BoundaryMeasure& sigma, double a,
                                       const Point& pole,
                                       const SolverConfig& cfg) {
  GreenField g = robin_green(dom, sigma, a, pole, cfg);
  HarmonicMeasure hm;
  hm.a = a;
  hm.pole = g.pole;
  hm.w.resize(dom.faces.size());
  for (size_t f = 0; f < dom.faces.size(); ++f)
    hm.w[f] = a * sigma.w[f] * g.values[size_t(dom.faces[f].owner)];
  hm.total = 0.0;
  for (double v : hm.w) hm.total += v;
  return hm;
}

HarmonicMeasure dirichlet_harmonic_measure_full(const GridDomain& dom,
                                                const BoundaryMeasure& sigma,
                                                const Point& pole,
                                                const SolverConfig& cfg) {
  GreenField g = dirichlet_green(dom, pole, cfg);
  const double t = std::pow(dom.h, dom.dim - 2);
  const int64_t sx = 1;
  const int64_t sy = dom.n[0];
  const int64_t sz = int64_t(dom.n[0]) * dom.n[1];
  std::vector<int64_t> strides = {-sx, sx, -sy, sy};
  if (dom.dim == 3) {
    strides.push_back(-sz);
    strides.push_back(sz);
  }

  // mass flowing into each boundary-adjacent cell: pinned values vanish,
  // so summing the Green function over all interior neighbors is the
  // discrete flux into the pinned layer
  std::vector<double> osig = owner_sigma(dom, sigma);
  std::vector<double> mass(size_t(dom.cell_count()), 0.0);
  for (int32_t c = 0; c < dom.cell_count(); ++c) {
    if (osig[size_t(c)] == 0.0) continue;  // not boundary-adjacent
    int64_t gidx = dom.cells[size_t(c)];
    double acc = 0.0;
    for (int64_t s : strides) {
      int32_t j = dom.cell_at[size_t(gidx + s)];
      if (j >= 0) acc += g.values[size_t(j)];
    }
    mass[size_t(c)] = t * acc;
  }

  HarmonicMeasure hm;
  hm.dirichlet = true;
  hm.a = INFINITY;
  hm.pole = g.pole;
  hm.w.resize(dom.faces.size());
  for (size_t f = 0; f < dom.faces.size(); ++f) {
    int32_t o = dom.faces[f].owner;
    hm.w[f] = mass[size_t(o)] * sigma.w[f] / osig[size_t(o)];
  }
  hm.total = 0.0;
  for (double v : hm.w) hm.total += v;
  return hm;
}

double dirichlet_harmonic_measure(const GridDomain& dom,
                                  const BoundaryMeasure& sigma,
                                  const Point& pole,
                                  const std::vector<int32_t>& faces,
                                  const SolverConfig& cfg) {
  std::vector<char> in_set(dom.faces.size(), 0);
  for (int32_t f : faces) {
    if (f < 0 || f >= int32_t(dom.faces.size()))
      throw invalid_argument("dirichlet measure: bad face id");
    in_set[size_t(f)] = 1;
  }
  std::vector<double> osig = owner_sigma(dom, sigma);
  std::vector<double> esig(size_t(dom.cell_count()), 0.0);
  for (size_t f = 0; f < dom.faces.size(); ++f)
    if (in_set[f]) esig[size_t(dom.faces[f].owner)] += sigma.w[f];

  SparseOperator L = assemble_stiffness(dom);
  std::vector<int32_t> pinned = boundary_adjacent_cells(dom);
  std::vector<double> values(pinned.size());
  for (size_t i = 0; i < pinned.size(); ++i)
    values[i] = esig[size_t(pinned[i])] / osig[size_t(pinned[i])];
  ReducedSystem R = reduce_pinned(dom, L, pinned, values);

  int32_t xc = dom.cell_near(pole);
  if (R.free_of_cell[size_t(xc)] < 0)
    throw invalid_argument("dirichlet measure: pole cell is boundary-pinned");
  std::vector<double> u_free = cg_solve(R.A, R.rhs_base, cfg);
  return u_free[size_t(R.free_of_cell[size_t(xc)])];
}

double measure_of_faces(const HarmonicMeasure& hm,
                        const std::vector<int32_t>& faces) {
  double s = 0.0;
  for (int32_t f : faces) s += hm.w[size_t(f)];
  return s;
}

double measure_of_ball(const GridDomain& dom, const HarmonicMeasure& hm,
                       const Point& q, double r) {
  double s = 0.0;
  for (int32_t f : dom.faces_within(q, r)) s += hm.w[size_t(f)];
  return s;
}

CheckReport bourgain_check(const GridDomain& dom, const BoundaryMeasure& sigma,
                           double a, int samples, double bound, uint64_t seed,
                           const SolverConfig& cfg) {
  if (samples < 1) throw invalid_argument("need at least one sample");
  CheckReport rep;
  rep.name = "bourgain";
  rep.a = a;
  rep.constant = bound;

  Rng rng(seed);
  const double r_lo = 4.0 * dom.h;
  const double r_hi = dom.diam / 10.0;
  if (r_hi < r_lo)
    throw invalid_argument("bourgain: resolution too coarse for diam/10");
  for (int s = 0; s < samples; ++s) {
    int32_t fid = int32_t(rng.below(dom.faces.size()));
    double r = log_uniform_r(rng, r_lo, r_hi);
    SampleRow row;
    row.q = dom.faces[size_t(fid)].center;
    row.r = r;
    if (r < 4.0 * dom.h) {  // resolution guard, kept for degenerate ranges
      row.skipped = true;
      ++rep.skipped;
      rep.rows.push_back(row);
      continue;
    }
    CorkscrewPoint cp = corkscrew_point(dom, row.q, r);
    HarmonicMeasure hm =
        robin_harmonic_measure(dom, sigma, a, cp.point, cfg);
    row.lhs = measure_of_ball(dom, hm, row.q, r);
    row.rhs = std::min(1.0, index_I(dom, sigma, a, row.q, r));
    row.ratio = row.lhs / row.rhs;
    row.ok = row.ratio >= 1.0 / bound;
    rep.rows.push_back(row);
  }
  finalize(rep);
  return rep;
}

CheckReport greenhm_equiv_check(const GridDomain& dom,
                                const BoundaryMeasure& sigma, double a,
                                int samples, double constant,
                                double far_factor, uint64_t seed,
                                const SolverConfig& cfg) {
  if (samples < 1) throw invalid_argument("need at least one sample");
  CheckReport rep;
  rep.name = "greenhm_equiv";
  rep.a = a;
  rep.constant = constant;

  Rng rng(seed);
  const double r_lo = 4.0 * dom.h;
  const double r_hi = dom.diam / 10.0;
  if (r_hi < r_lo)
    throw invalid_argument("greenhm: resolution too coarse for diam/10");
  const int n = dom.dim;
  for (int s = 0; s < samples; ++s) {
    int32_t fid = int32_t(rng.below(dom.faces.size()));
    double r = log_uniform_r(rng, r_lo, r_hi);
    Point q = dom.faces[size_t(fid)].center;

    int32_t xc = -1;
    for (int tries = 0; tries < 4000; ++tries) {
      int32_t c = int32_t(rng.below(uint64_t(dom.cell_count())));
      if (dist3(dom.cell_center(c), q) >= far_factor * r) {
        xc = c;
        break;
      }
    }
    SampleRow row;
    row.q = q;
    row.r = r;
    if (xc < 0) {
      row.skipped = true;
      ++rep.skipped;
      rep.rows.push_back(row);
      continue;
    }
    // one solve gives both sides: the ball measure from the face trace
    // and G(X, A_r(Q)) by operator symmetry
    CorkscrewPoint cp = corkscrew_point(dom, q, r);
    GreenField g = robin_green(dom, sigma, a, dom.cell_center(xc), cfg);
    double gval = g.values[size_t(cp.cell)];
    row.lhs = 0.0;
    for (int32_t f : dom.faces_within(q, r))
      row.lhs += a * sigma.w[size_t(f)] *
                 g.values[size_t(dom.faces[size_t(f)].owner)];
    double min_term = std::min(1.0, index_I(dom, sigma, a, q, r));
    row.rhs = gval * std::pow(r, n - 2.0) * min_term;
    row.ratio = row.lhs / row.rhs;
    row.ok = row.ratio >= 1.0 / constant && row.ratio <= constant;
    rep.rows.push_back(row);
  }
  finalize(rep);
  return rep;
}

CheckReport doubling_check(const GridDomain& dom, const BoundaryMeasure& sigma,
                           double a, int samples, double bound, uint64_t seed,
                           const SolverConfig& cfg, double r_lo, double r_hi) {
  if (samples < 1) throw invalid_argument("need at least one sample");
  CheckReport rep;
  rep.name = "doubling";
  rep.a = a;
  rep.constant = bound;

  if (r_lo <= 0.0) r_lo = 4.0 * dom.h;
  if (r_hi <= 0.0) r_hi = dom.diam / 10.0;
  if (r_hi < r_lo) throw invalid_argument("doubling: empty radius range");

  int32_t x0 = deepest_cell(dom);
  Point xp = dom.cell_center(x0);
  HarmonicMeasure hm = robin_harmonic_measure(dom, sigma, a, xp, cfg);

  Rng rng(seed);
  for (int s = 0; s < samples; ++s) {
    int32_t fid = int32_t(rng.below(dom.faces.size()));
    double r = log_uniform_r(rng, r_lo, r_hi);
    SampleRow row;
    row.q = dom.faces[size_t(fid)].center;
    row.r = r;
    if (2.0 * r > dom.diam) {
      // the doubled ball swallows the whole boundary; record and flag,
      // the ratio statement is vacuous at this scale
      row.clipped = true;
      row.skipped = true;
      ++rep.skipped;
      rep.rows.push_back(row);
      continue;
    }
    if (dist3(xp, row.q) < 4.0 * r) {  // pole must stay far from the ball
      row.skipped = true;
      ++rep.skipped;
      rep.rows.push_back(row);
      continue;
    }
    row.lhs = measure_of_ball(dom, hm, row.q, 2.0 * r);
    row.rhs = measure_of_ball(dom, hm, row.q, r);
    row.ratio = row.lhs / row.rhs;
    row.ok = row.ratio <= bound;
    rep.rows.push_back(row);
  }
  finalize(rep);
  return rep;
}

CheckReport change_of_pole_check(const GridDomain& dom,
                                 const BoundaryMeasure& sigma, double a,
                                 int samples, double constant, uint64_t seed,
                                 const SolverConfig& cfg) {
  if (samples < 1) throw invalid_argument("need at least one sample");
  CheckReport rep;
  rep.name = "change_of_pole";
  rep.a = a;
  rep.constant = constant;

  Rng rng(seed);
  const double r_lo = 4.0 * dom.h;
  const double r_hi = dom.diam / 10.0;
  if (r_hi < r_lo)
    throw invalid_argument("change_of_pole: resolution too coarse");
  for (int s = 0; s < samples; ++s) {
    int32_t fid = int32_t(rng.below(dom.faces.size()));
    double r = log_uniform_r(rng, r_lo, r_hi);
    Point q = dom.faces[size_t(fid)].center;
    std::vector<int32_t> ball_faces = dom.faces_within(q, r);
    SampleRow row;
    row.q = q;
    row.r = r;
    if (ball_faces.size() < 2) {
      row.skipped = true;
      ++rep.skipped;
      rep.rows.push_back(row);
      continue;
    }
    std::vector<int32_t> subset;
    for (int32_t f : ball_faces)
      if (rng.below(2) == 0) subset.push_back(f);
    if (subset.empty() || subset.size() == ball_faces.size())
      subset.assign(ball_faces.begin(),
                    ball_faces.begin() + ball_faces.size() / 2);

    int32_t cx = -1, cy = -1;
    for (int tries = 0; tries < 4000 && (cx < 0 || cy < 0); ++tries) {
      int32_t c = int32_t(rng.below(uint64_t(dom.cell_count())));
      if (dist3(dom.cell_center(c), q) < 4.0 * r) continue;
      if (cx < 0)
        cx = c;
      else if (c != cx)
        cy = c;
    }
    if (cx < 0 || cy < 0) {
      row.skipped = true;
      ++rep.skipped;
      rep.rows.push_back(row);
      continue;
    }
    HarmonicMeasure wx =
        robin_harmonic_measure(dom, sigma, a, dom.cell_center(cx), cfg);
    HarmonicMeasure wy =
        robin_harmonic_measure(dom, sigma, a, dom.cell_center(cy), cfg);
    double nx = measure_of_faces(wx, subset) / measure_of_faces(wx, ball_faces);
    double ny = measure_of_faces(wy, subset) / measure_of_faces(wy, ball_faces);
    row.lhs = nx;
    row.rhs = ny;
    row.ratio = nx / ny;
    row.ok = row.ratio >= 1.0 / constant && row.ratio <= constant;
    rep.rows.push_back(row);
  }
  finalize(rep);
  return rep;
}

std::vector<SampleRow> boundary_comparison_at(
    const GridDomain& dom, const BoundaryMeasure& sigma, double a,
    int32_t q_face, double r, const std::vector<int32_t>& set_u,
    const std::vector<int32_t>& set_v, int probes, double constant,
    double ktilde, const SolverConfig& cfg) {
  if (q_face < 0 || q_face >= int32_t(dom.faces.size()))
    throw invalid_argument("boundary comparison: bad face id");
  if (set_u.empty() || set_v.empty())
    throw invalid_argument("boundary comparison: empty data set");
  Point q = dom.faces[size_t(q_face)].center;
  std::vector<char> in_u(dom.faces.size(), 0);
  for (int32_t f : set_u) in_u[size_t(f)] = 1;
  for (int32_t f : set_v)
    if (in_u[size_t(f)])
      throw invalid_argument("boundary comparison: data sets overlap");
  for (const auto& sets : {set_u, set_v})
    for (int32_t f : sets)
      if (dist3(dom.faces[size_t(f)].center, q) < ktilde * r)
        throw invalid_argument(
            "boundary comparison: data supported inside B(Q, K*r)");

  SparseOperator L = assemble_stiffness(dom);
  SparseOperator A = robin_operator(L, assemble_boundary_mass(dom, sigma), a);
  std::vector<double> u =
      cg_solve(A, indicator_boundary_rhs(dom, sigma, set_u, a), cfg);
  std::vector<double> v =
      cg_solve(A, indicator_boundary_rhs(dom, sigma, set_v, a), cfg);

  CorkscrewPoint cp = corkscrew_point(dom, q, std::max(r, dom.h));
  double ref = u[size_t(cp.cell)] / v[size_t(cp.cell)];

  std::vector<int32_t> near = cells_in_ball(dom, q, r);
  std::vector<SampleRow> rows;
  int step = std::max<int>(1, int(near.size()) / std::max(probes, 1));
  for (size_t i = 0; i < near.size(); i += size_t(step)) {
    int32_t c = near[i];
    SampleRow row;
    row.q = dom.cell_center(c);
    row.r = r;
    row.lhs = u[size_t(c)] / v[size_t(c)];
    row.rhs = ref;
    row.ratio = row.lhs / row.rhs;
    row.ok = row.ratio >= 1.0 / constant && row.ratio <= constant;
    rows.push_back(row);
  }
  if (rows.empty()) throw invalid_argument("boundary comparison: no probes");
  return rows;
}

CheckReport boundary_comparison_check(const GridDomain& dom,
                                      const BoundaryMeasure& sigma, double a,
                                      int samples, double constant,
                                      double ktilde, uint64_t seed,
                                      const SolverConfig& cfg) {
  if (samples < 1) throw invalid_argument("need at least one sample");
  CheckReport rep;
  rep.name = "boundary_comparison";
  rep.a = a;
  rep.constant = constant;

  Rng rng(seed);
  const double r_lo = 4.0 * dom.h;
  const double r_hi = dom.diam / (2.5 * ktilde);
  if (r_hi < r_lo)
    throw invalid_argument("boundary comparison: resolution too coarse");
  int made = 0;
  for (int s = 0; s < samples * 4 && made < samples; ++s) {
    int32_t fid = int32_t(rng.below(dom.faces.size()));
    double r = log_uniform_r(rng, r_lo, r_hi);
    Point q = dom.faces[size_t(fid)].center;

    // split the far faces by a random direction through their centroid
    std::vector<int32_t> far;
    for (size_t f = 0; f < dom.faces.size(); ++f)
      if (dist3(dom.faces[f].center, q) >= ktilde * r)
        far.push_back(int32_t(f));
    if (far.size() < 8) continue;
    Point centroid{0, 0, 0};
    for (int32_t f : far)
      for (int k = 0; k < 3; ++k) centroid[k] += dom.faces[size_t(f)].center[k];
    for (int k = 0; k < 3; ++k) centroid[k] /= double(far.size());
    Point dir{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
              dom.dim == 3 ? rng.uniform(-1.0, 1.0) : 0.0};
    std::vector<int32_t> set_u, set_v;
    for (int32_t f : far) {
      double dp = 0.0;
      for (int k = 0; k < 3; ++k)
        dp += (dom.faces[size_t(f)].center[k] - centroid[k]) * dir[k];
      (dp >= 0.0 ? set_u : set_v).push_back(f);
    }
    if (set_u.empty() || set_v.empty()) continue;

    std::vector<SampleRow> rows = boundary_comparison_at(
        dom, sigma, a, fid, r, set_u, set_v, 8, constant, ktilde, cfg);
    rep.rows.insert(rep.rows.end(), rows.begin(), rows.end());
    ++made;
  }
  if (made == 0)
    throw invalid_argument("boundary comparison: no admissible configuration");
  finalize(rep);
  return rep;
}

CheckReport smoothing_check(const GridDomain& dom,
                            const BoundaryMeasure& sigma, double a,
                            int samples, double constant, uint64_t seed,
                            const SolverConfig& cfg) {
  if (samples < 1) throw invalid_argument("need at least one sample");
  CheckReport rep;
  rep.name = "smoothing";
  rep.a = a;
  rep.constant = constant;

  int32_t x0 = deepest_cell(dom);
  Point xp = dom.cell_center(x0);
  GreenField g = robin_green(dom, sigma, a, xp, cfg);
  HarmonicMeasure wd = dirichlet_harmonic_measure_full(dom, sigma, xp, cfg);

  Rng rng(seed);
  for (int s = 0; s < samples; ++s) {
    int32_t fid = int32_t(rng.below(dom.faces.size()));
    Point p = dom.faces[size_t(fid)].center;
    CriticalRhoX rx = critical_rho_x(dom, sigma, a, p);
    SampleRow row;
    row.q = p;
    row.r = rx.rho;
    if (rx.rho < 4.0 * dom.h || rx.clamped_high || rx.clamped_low ||
        dist3(xp, p) < 4.0 * rx.rho) {
      row.skipped = true;
      ++rep.skipped;
      rep.rows.push_back(row);
      continue;
    }
    double sig_ball = sigma_ball(dom, sigma, p, rx.rho);
    row.lhs = a * g.values[size_t(dom.faces[size_t(fid)].owner)];
    row.rhs = measure_of_ball(dom, wd, p, rx.rho) / sig_ball;
    row.ratio = row.lhs / row.rhs;
    row.ok = row.ratio >= 1.0 / constant && row.ratio <= constant;
    rep.rows.push_back(row);
  }
  finalize(rep);
  return rep;
}

AinftyReport ainfty_diagnostic(const GridDomain& dom,
                               const BoundaryMeasure& sigma, double a,
                               int samples, double theta_min, uint64_t seed,
                               const SolverConfig& cfg) {
  if (samples < 8) throw invalid_argument("envelope fit needs >= 8 samples");
  AinftyReport rep;
  rep.a = a;
  rep.theta_min = theta_min;

  int32_t x0 = deepest_cell(dom);
  Point xp = dom.cell_center(x0);
  HarmonicMeasure hm = robin_harmonic_measure(dom, sigma, a, xp, cfg);

  Rng rng(seed);
  const double r_lo = 8.0 * dom.h;
  const double r_hi = dom.diam / 8.0;
  if (r_hi < r_lo) throw invalid_argument("ainfty: resolution too coarse");
  for (int s = 0; s < samples; ++s) {
    int32_t fid = int32_t(rng.below(dom.faces.size()));
    double r = log_uniform_r(rng, r_lo, r_hi);
    Point q = dom.faces[size_t(fid)].center;
    SampleRow row;
    row.q = q;
    row.r = r;
    // exclusion factor 3 instead of 4: the two-scale window r >= 8h
    // leaves no admissible boundary points otherwise on compact domains
    if (dist3(xp, q) < 3.0 * r) {
      row.skipped = true;
      ++rep.skipped;
      rep.rows.push_back(row);
      continue;
    }
    std::vector<int32_t> inner = dom.faces_within(q, r / 2.0);
    if (inner.empty()) {
      row.skipped = true;
      ++rep.skipped;
      rep.rows.push_back(row);
      continue;
    }
    Point p = dom.faces[size_t(inner[rng.below(inner.size())])].center;
    double smax = r / 2.0;
    double smin = std::min(4.0 * dom.h, smax);
    double sr = log_uniform_r(rng, smin, smax);
    std::vector<int32_t> pball = dom.faces_within(p, sr);
    if (pball.size() < 2) {
      row.skipped = true;
      ++rep.skipped;
      rep.rows.push_back(row);
      continue;
    }
    std::vector<int32_t> subset;
    for (int32_t f : pball)
      if (rng.below(2) == 0) subset.push_back(f);
    if (subset.empty() || subset.size() == pball.size())
      subset.assign(pball.begin(), pball.begin() + pball.size() / 2);

    double sig_sub = 0.0, sig_ball_v = 0.0;
    for (int32_t f : subset) sig_sub += sigma.w[size_t(f)];
    for (int32_t f : pball) sig_ball_v += sigma.w[size_t(f)];
    double w_sub = measure_of_faces(hm, subset);
    double w_ball = measure_of_faces(hm, pball);
    row.lhs = sig_sub / sig_ball_v;
    row.rhs = w_sub / w_ball;
    row.ratio = row.rhs / row.lhs;
    row.ok = true;
    rep.rows.push_back(row);
  }

  // upper-envelope fit: bin log(sigma ratio), take the max log(omega
  // ratio) per bin, least-squares over bin maxima
  std::vector<double> xs, ys;
  for (const auto& row : rep.rows) {
    if (row.skipped || !(row.lhs > 0.0) || !(row.lhs < 1.0) ||
        !(row.rhs > 0.0))
      continue;
    xs.push_back(std::log(row.lhs));
    ys.push_back(std::log(row.rhs));
  }
  if (xs.size() < 6)
    throw invalid_argument("ainfty: too few usable samples for the fit");
  double xmin = *std::min_element(xs.begin(), xs.end());
  double xmax = *std::max_element(xs.begin(), xs.end());
  if (!(xmax - xmin > 0.2))
    throw invalid_argument("ainfty: sigma ratios too clustered for a fit");
  const int nbins = 8;
  std::vector<double> bx(nbins, 0.0), by(nbins, -INFINITY);
  std::vector<int> bc(nbins, 0);
  for (size_t i = 0; i < xs.size(); ++i) {
    int b = std::min(nbins - 1, int((xs[i] - xmin) / (xmax - xmin) * nbins));
    bx[size_t(b)] += xs[i];
    by[size_t(b)] = std::max(by[size_t(b)], ys[i]);
    ++bc[size_t(b)];
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int np = 0;
  for (int b = 0; b < nbins; ++b) {
    if (bc[size_t(b)] == 0) continue;
    double x = bx[size_t(b)] / bc[size_t(b)];
    double y = by[size_t(b)];
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++np;
  }
  if (np < 3) throw invalid_argument("ainfty: too few envelope bins");
  rep.theta = (np * sxy - sx * sy) / (np * sxx - sx * sx);
  rep.c_fit = std::exp((sy - rep.theta * sx) / np);
  rep.pass = rep.theta >= theta_min;
  return rep;
}

CoverSpec build_cover(const GridDomain& dom, double r, uint64_t seed) {
  if (!(r >= 4.0 * dom.h) || !(r <= dom.diam))
    throw invalid_argument("cover radius must lie in [4h, diam]");
  CoverSpec cover;
  cover.r = r;

  std::vector<int32_t> order(dom.faces.size());
  for (size_t f = 0; f < order.size(); ++f) order[f] = int32_t(f);
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<char> is_center(dom.faces.size(), 0);
  for (int32_t f : order) {
    bool blocked = false;
    for (int32_t g : dom.faces_within(dom.faces[size_t(f)].center, r))
      if (is_center[size_t(g)]) {
        blocked = true;
        break;
      }
    if (!blocked) {
      is_center[size_t(f)] = 1;
      cover.centers.push_back(f);
    }
  }
  std::sort(cover.centers.begin(), cover.centers.end());

  cover.overlap_bound = 0;
  for (size_t f = 0; f < dom.faces.size(); ++f) {
    int cnt = 0;
    for (int32_t g : dom.faces_within(dom.faces[f].center, 2.0 * r))
      if (is_center[size_t(g)]) ++cnt;
    cover.overlap_bound = std::max(cover.overlap_bound, cnt);
  }
  return cover;
}

double makarov_entropy(const GridDomain& dom, const HarmonicMeasure& hm,
                       const CoverSpec& cover) {
  if (cover.centers.empty()) throw invalid_argument("empty cover");
  double s = 0.0;
  for (int32_t c : cover.centers) {
    double m = measure_of_ball(dom, hm, dom.faces[size_t(c)].center,
                               2.0 * cover.r);
    s += m * m;
  }
  return s;
}

}  // namespace robinflux
