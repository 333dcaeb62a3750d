#include "robinflux/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "robinflux/errors.hpp"
#include "robinflux/hash.hpp"
#include "robinflux/rng.hpp"

namespace robinflux {

namespace {

constexpr double kPlaneTol = 1e-9;  // relative to h; absorbs fp plane ties

struct AxisLattice {
  double offset;  // cell centers sit at offset + j*h
  int jmin;
  int count;
};

// Pick the lattice offset (0 or h/2) that snaps the base surface at +-T
// closest to a voxel face plane, then extend the grid to cover +-(B + 2h)
// so an exterior ring always exists.  Symmetric shapes only.
AxisLattice make_lattice(double T, double B, double h) {
  double best_off = 0.5 * h;
  double best_err = std::numeric_limits<double>::infinity();
  for (double off : {0.5 * h, 0.0}) {
    // largest center strictly below T
    double j = std::floor((T - off) / h - kPlaneTol);
    double surf = off + j * h + 0.5 * h;
    double err = std::fabs(surf - T);
    if (err < best_err - 1e-15) {
      best_err = err;
      best_off = off;
    }
  }
  double lo = -B - 2.0 * h;
  double hi = B + 2.0 * h;
  int jmin = int(std::ceil((lo - best_off) / h));
  int jmax = int(std::floor((hi - best_off) / h));
  return {best_off, jmin, jmax - jmin + 1};
}

struct Box {
  Point lo, hi;
};

struct Square {
  Point center;
  int axis;
  int sign;
  double side;
};

// One bump generation: every exposed square of side s sprouts an outward
// cube of side s/3 on its center.  The square is replaced by its 3^(d-1)-1
// off-center children plus the bump's side and top faces, all of side s/3.
void grow_generation(int dim, std::vector<Square>& squares,
                     std::vector<Box>& boxes) {
  std::vector<Square> next;
  next.reserve(squares.size() * (dim == 3 ? 13 : 5));
  for (const Square& sq : squares) {
    double s3 = sq.side / 3.0;
    Box bump;
    for (int a = 0; a < 3; ++a) {
      bump.lo[a] = sq.center[a] - 0.5 * s3;
      bump.hi[a] = sq.center[a] + 0.5 * s3;
    }
    if (sq.sign > 0) {
      bump.lo[sq.axis] = sq.center[sq.axis];
      bump.hi[sq.axis] = sq.center[sq.axis] + s3;
    } else {
      bump.lo[sq.axis] = sq.center[sq.axis] - s3;
      bump.hi[sq.axis] = sq.center[sq.axis];
    }
    boxes.push_back(bump);

    int c1 = (sq.axis + 1) % 3, c2 = (sq.axis + 2) % 3;
    if (dim == 2) {
      // one cross axis in the plane; keep the in-plane one
      c1 = (sq.axis == 0) ? 1 : 0;
      c2 = -1;
    }
    // children on the original plane (3x3 minus center / 3 minus center)
    for (int u = -1; u <= 1; ++u) {
      for (int v = -1; v <= 1; ++v) {
        if (dim == 2 && v != 0) continue;
        if (u == 0 && v == 0) continue;
        Square child = sq;
        child.side = s3;
        child.center[c1] += u * s3;
        if (c2 >= 0) child.center[c2] += v * s3;
        next.push_back(child);
      }
    }
    // bump side faces
    for (int c : {c1, c2}) {
      if (c < 0) continue;
      for (int t : {-1, 1}) {
        Square side{sq.center, c, t, s3};
        side.center[sq.axis] += sq.sign * 0.5 * s3;
        side.center[c] += t * 0.5 * s3;
        next.push_back(side);
      }
    }
    // bump top
    Square top = sq;
    top.side = s3;
    top.center[sq.axis] += sq.sign * s3;
    next.push_back(top);
  }
  squares.swap(next);
}

void fill_cells_from_mask(GridDomain& dom) {
  int64_t g_total = dom.grid_size();
  dom.cell_at.assign(size_t(g_total), -1);
  dom.cells.clear();
  for (int64_t g = 0; g < g_total; ++g) {
    if (dom.interior(g)) {
      dom.cell_at[size_t(g)] = int32_t(dom.cells.size());
      dom.cells.push_back(g);
    }
  }
  if (dom.cells.empty())
    throw invalid_argument("domain has no interior cells at this resolution");
  if (dom.cells.size() > size_t(std::numeric_limits<int32_t>::max()))
    throw invalid_argument("domain too large (cell ids overflow int32)");
}

void check_connected(const GridDomain& dom) {
  std::vector<char> seen(dom.cells.size(), 0);
  std::deque<int32_t> queue;
  queue.push_back(0);
  seen[0] = 1;
  size_t reached = 1;
  const int64_t strides[3] = {1, dom.n[0], int64_t(dom.n[0]) * dom.n[1]};
  while (!queue.empty()) {
    int32_t c = queue.front();
    queue.pop_front();
    int64_t g = dom.cells[size_t(c)];
    for (int a = 0; a < dom.dim; ++a) {
      for (int64_t d : {-strides[a], strides[a]}) {
        int64_t gn = g + d;
        // pad ring guarantees neighbors stay in the grid box
        int32_t cn = dom.cell_at[size_t(gn)];
        if (cn >= 0 && !seen[size_t(cn)]) {
          seen[size_t(cn)] = 1;
          ++reached;
          queue.push_back(cn);
        }
      }
    }
  }
  if (reached != dom.cells.size())
    throw invalid_argument(
        "interior cell graph is disconnected; refine h or fix the shape");
}

// Exact squared Euclidean distance (in cell units) to the nearest exterior
// cell, Felzenszwalb-Huttenlocher separable transform.
std::vector<int32_t> exterior_distance_sq(const GridDomain& dom) {
  const int64_t g_total = dom.grid_size();
  const int nx = dom.n[0], ny = dom.n[1], nz = dom.n[2];
  const int32_t INF = std::numeric_limits<int32_t>::max() / 4;
  std::vector<int32_t> d(static_cast<size_t>(g_total));

  // pass 1: 1-D distance along x (two sweeps), then square
  for (int iz = 0; iz < nz; ++iz) {
    for (int iy = 0; iy < ny; ++iy) {
      int64_t row = dom.grid_index(0, iy, iz);
      int32_t run = INF;
      for (int ix = 0; ix < nx; ++ix) {
        run = dom.interior(row + ix) ? (run >= INF ? INF : run + 1) : 0;
        d[size_t(row + ix)] = run;
      }
      run = INF;
      for (int ix = nx - 1; ix >= 0; --ix) {
        run = dom.interior(row + ix) ? (run >= INF ? INF : run + 1) : 0;
        int32_t v = std::min(d[size_t(row + ix)], run);
        d[size_t(row + ix)] = (v >= INF) ? INF : v * v;
      }
    }
  }

  // passes 2..dim: lower envelope of parabolas along y, then z.  Every grid
  // line contains pad-ring exterior cells, so pass-1 values are all finite.
  auto envelope_pass = [&](int axis) {
    const int len = dom.n[size_t(axis)];
    const int64_t stride = (axis == 1) ? nx : int64_t(nx) * ny;
    std::vector<double> f(static_cast<size_t>(len));
    std::vector<int> v(static_cast<size_t>(len));
    std::vector<double> z(static_cast<size_t>(len) + 1);
    auto line = [&](int64_t base) {
      for (int q = 0; q < len; ++q) f[size_t(q)] = d[size_t(base + q * stride)];
      int k = 0;
      v[0] = 0;
      z[0] = -std::numeric_limits<double>::infinity();
      z[1] = std::numeric_limits<double>::infinity();
      for (int q = 1; q < len; ++q) {
        double s;
        for (;;) {
          int p = v[size_t(k)];
          s = (f[size_t(q)] + double(q) * q - (f[size_t(p)] + double(p) * p)) /
              (2.0 * q - 2.0 * p);
          if (s <= z[size_t(k)] && k > 0) {
            --k;
            continue;
          }
          break;
        }
        ++k;
        v[size_t(k)] = q;
        z[size_t(k)] = s;
        z[size_t(k) + 1] = std::numeric_limits<double>::infinity();
      }
      int kk = 0;
      for (int q = 0; q < len; ++q) {
        while (z[size_t(kk) + 1] < q) ++kk;
        int p = v[size_t(kk)];
        d[size_t(base + q * stride)] =
            int32_t(std::llround(f[size_t(p)]) + int64_t(q - p) * (q - p));
      }
    };
    if (axis == 1) {
      for (int iz = 0; iz < nz; ++iz)
        for (int ix = 0; ix < nx; ++ix) line(dom.grid_index(ix, 0, iz));
    } else {
      for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) line(dom.grid_index(ix, iy, 0));
    }
  };
  envelope_pass(1);
  if (dom.dim == 3) envelope_pass(2);
  return d;
}

double dist(const Point& a, const Point& b) {
  double s = 0;
  for (int i = 0; i < 3; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Diameter of the boundary: max pairwise distance restricted to the extreme
// face corners along a fixed fan of lattice directions.  Corners (not
// centers) so boxes come out exact; deterministic by construction.
double boundary_diameter(const GridDomain& dom) {
  std::vector<Point> corners;
  corners.reserve(dom.faces.size() * 4);
  double hh = 0.5 * dom.h;
  for (const BoundaryFace& f : dom.faces) {
    int c1 = (f.axis + 1) % 3, c2 = (f.axis + 2) % 3;
    for (int u = -1; u <= 1; u += 2)
      for (int v = -1; v <= 1; v += 2) {
        Point p = f.center;
        if (c1 < dom.dim) p[c1] += u * hh;
        if (c2 < dom.dim) p[c2] += v * hh;
        corners.push_back(p);
      }
  }
  std::vector<Point> cand;
  for (int dx = 0; dx <= 1; ++dx)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dz = -1; dz <= 1; ++dz) {
        if (dx == 0 && (dy < 0 || (dy == 0 && dz <= 0))) continue;
        if (dom.dim == 2 && dz != 0) continue;
        double dir[3] = {double(dx), double(dy), double(dz)};
        double best_hi = -std::numeric_limits<double>::infinity();
        double best_lo = std::numeric_limits<double>::infinity();
        Point phi{}, plo{};
        for (const Point& c : corners) {
          double s = c[0] * dir[0] + c[1] * dir[1] + c[2] * dir[2];
          if (s > best_hi) {
            best_hi = s;
            phi = c;
          }
          if (s < best_lo) {
            best_lo = s;
            plo = c;
          }
        }
        cand.push_back(phi);
        cand.push_back(plo);
      }
  double best = 0;
  for (size_t i = 0; i < cand.size(); ++i)
    for (size_t j = i + 1; j < cand.size(); ++j)
      best = std::max(best, dist(cand[i], cand[j]));
  return best;
}

void build_face_index(GridDomain& dom) {
  FaceIndex& idx = dom.face_index;
  Point lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
  for (const BoundaryFace& f : dom.faces)
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], f.center[a]);
      hi[a] = std::max(hi[a], f.center[a]);
    }
  double bucket = std::max(2.0 * dom.h, dom.diam / 80.0);
  idx.lo = lo;
  idx.bucket = bucket;
  int total = 1;
  for (int a = 0; a < 3; ++a) {
    idx.nb[a] = std::max(1, int((hi[a] - lo[a]) / bucket) + 1);
    total *= idx.nb[a];
  }
  idx.buckets.assign(size_t(total), {});
  for (int32_t i = 0; i < int32_t(dom.faces.size()); ++i) {
    const Point& c = dom.faces[size_t(i)].center;
    int b[3];
    for (int a = 0; a < 3; ++a)
      b[a] = std::min(idx.nb[a] - 1,
                      std::max(0, int((c[a] - lo[a]) / bucket)));
    idx.buckets[size_t((b[2] * idx.nb[1] + b[1]) * idx.nb[0] + b[0])].push_back(i);
  }
}

// Everything derived from the interior mask: cell table, connectivity,
// faces (+gamma), distances, diameter, spatial index, hash.
void finalize_domain(GridDomain& dom) {
  fill_cells_from_mask(dom);
  check_connected(dom);

  dom.faces.clear();
  const int64_t strides[3] = {1, dom.n[0], int64_t(dom.n[0]) * dom.n[1]};
  double face_area = std::pow(dom.h, dom.dim - 1);
  for (int32_t c = 0; c < dom.cell_count(); ++c) {
    int64_t g = dom.cells[size_t(c)];
    Point ctr = dom.cell_center(c);
    for (int a = 0; a < dom.dim; ++a) {
      for (int sgn : {-1, +1}) {
        int64_t gn = g + sgn * strides[a];
        if (dom.cell_at[size_t(gn)] >= 0) continue;
        BoundaryFace f;
        f.owner = c;
        f.axis = int8_t(a);
        f.sign = int8_t(sgn);
        f.center = ctr;
        f.center[a] += 0.5 * sgn * dom.h;
        f.area = face_area;
        f.gamma = 1.0;
        if (dom.meta.kind == DomainKind::ball) {
          double norm = dist(f.center, {0, 0, 0});
          f.gamma = norm > 0 ? std::fabs(f.center[a]) / norm : 1.0;
        }
        dom.faces.push_back(f);
      }
    }
  }
  if (dom.faces.empty()) throw internal_error("no boundary faces extracted");

  std::vector<int32_t> dsq = exterior_distance_sq(dom);
  dom.delta.resize(dom.cells.size());
  for (size_t i = 0; i < dom.cells.size(); ++i)
    dom.delta[i] = dom.h * (std::sqrt(double(dsq[size_t(dom.cells[i])])) - 0.5);

  dom.diam = boundary_diameter(dom);
  build_face_index(dom);

  Fnv1a hash;
  hash.feed_i64(dom.dim);
  hash.feed_double(dom.h);
  for (int a = 0; a < 3; ++a) hash.feed_i64(dom.n[a]);
  for (int a = 0; a < 3; ++a) hash.feed_double(dom.origin[a]);
  hash.feed_i64(int64_t(dom.meta.kind));
  hash.feed_double(dom.meta.radius);
  hash.feed_double(dom.meta.side);
  hash.feed_i64(dom.meta.depth);
  hash.feed(dom.mask.data(), dom.mask.size() * sizeof(uint64_t));
  dom.content_hash = hash.value();
}

void set_bit(std::vector<uint64_t>& mask, int64_t g) {
  mask[size_t(g >> 6)] |= (uint64_t(1) << (g & 63));
}

}  // namespace

std::vector<int32_t> FaceIndex::query(const std::vector<BoundaryFace>& faces,
                                      const Point& q, double r) const {
  std::vector<int32_t> out;
  int blo[3], bhi[3];
  for (int a = 0; a < 3; ++a) {
    blo[a] = std::max(0, int(std::floor((q[a] - r - lo[a]) / bucket)));
    bhi[a] = std::min(nb[a] - 1, int(std::floor((q[a] + r - lo[a]) / bucket)));
    if (blo[a] > bhi[a]) return out;
  }
  double r2 = r * r;
  for (int bz = blo[2]; bz <= bhi[2]; ++bz)
    for (int by = blo[1]; by <= bhi[1]; ++by)
      for (int bx = blo[0]; bx <= bhi[0]; ++bx) {
        const auto& ids = buckets[size_t((bz * nb[1] + by) * nb[0] + bx)];
        for (int32_t i : ids) {
          const Point& c = faces[size_t(i)].center;
          double d2 = 0;
          for (int a = 0; a < 3; ++a) d2 += (c[a] - q[a]) * (c[a] - q[a]);
          if (d2 < r2) out.push_back(i);
        }
      }
  std::sort(out.begin(), out.end());
  return out;
}

int32_t GridDomain::cell_near(const Point& p, double max_dist) const {
  if (max_dist <= 0) max_dist = 8.0 * h;
  int q[3];
  for (int a = 0; a < 3; ++a) {
    double t = (p[a] - origin[a]) / h - 0.5;
    q[a] = int(std::lround(t));
  }
  if (dim == 2) q[2] = 0;
  int max_ring = int(std::ceil(max_dist / h)) + 1;
  int32_t best = -1;
  double best_d2 = max_dist * max_dist;
  for (int ring = 0; ring <= max_ring; ++ring) {
    // once we hold a candidate, one extra ring settles the true nearest
    bool improved = false;
    int zlo = dim == 3 ? q[2] - ring : 0, zhi = dim == 3 ? q[2] + ring : 0;
    for (int iz = zlo; iz <= zhi; ++iz) {
      if (iz < 0 || iz >= n[2]) continue;
      for (int iy = q[1] - ring; iy <= q[1] + ring; ++iy) {
        if (iy < 0 || iy >= n[1]) continue;
        for (int ix = q[0] - ring; ix <= q[0] + ring; ++ix) {
          if (ix < 0 || ix >= n[0]) continue;
          int cheb = std::max({std::abs(ix - q[0]), std::abs(iy - q[1]),
                               std::abs(iz - q[2])});
          if (cheb != ring) continue;
          int32_t c = cell_at[size_t(grid_index(ix, iy, iz))];
          if (c < 0) continue;
          Point ctr = cell_center(c);
          double d2 = 0;
          for (int a = 0; a < 3; ++a) d2 += (ctr[a] - p[a]) * (ctr[a] - p[a]);
          if (d2 < best_d2 - 1e-15 || (std::fabs(d2 - best_d2) <= 1e-15 &&
                                       (best < 0 || c < best))) {
            best = c;
            best_d2 = d2;
            improved = true;
          }
        }
      }
    }
    if (best >= 0 && !improved && double(ring) * h > std::sqrt(best_d2) + h)
      break;
  }
  if (best < 0)
    throw invalid_argument("point is not inside the domain (no interior cell nearby)");
  return best;
}

GridDomain build_ball_domain(double radius, double h, int dim) {
  if (dim != 2 && dim != 3)
    throw invalid_argument("dim must be 2 or 3");
  if (!(h > 0) || !(radius > 0))
    throw invalid_argument("radius and h must be positive");
  if (h > radius / 4.0)
    throw invalid_argument("h too coarse: need h <= radius/4 to resolve the ball");

  GridDomain dom;
  dom.dim = dim;
  dom.h = h;
  dom.meta.kind = DomainKind::ball;
  dom.meta.radius = radius;
  dom.meta.ell = radius;
  dom.meta.base_size = 2.0 * radius;

  AxisLattice lat = make_lattice(radius, radius, h);
  for (int a = 0; a < 3; ++a) {
    if (a < dim) {
      dom.n[a] = lat.count;
      dom.origin[a] = lat.offset + lat.jmin * h - 0.5 * h;
    } else {
      dom.n[a] = 1;
      dom.origin[a] = -0.5 * h;
    }
  }

  dom.mask.assign(size_t((dom.grid_size() + 63) / 64), 0);
  double r2 = radius * radius;
  for (int iz = 0; iz < dom.n[2]; ++iz)
    for (int iy = 0; iy < dom.n[1]; ++iy)
      for (int ix = 0; ix < dom.n[0]; ++ix) {
        double x = dom.origin[0] + (ix + 0.5) * h;
        double y = dom.origin[1] + (iy + 0.5) * h;
        double z = dim == 3 ? dom.origin[2] + (iz + 0.5) * h : 0.0;
        if (x * x + y * y + z * z < r2)
          set_bit(dom.mask, dom.grid_index(ix, iy, iz));
      }
  finalize_domain(dom);
  return dom;
}

GridDomain build_prefractal_domain(double side, int depth, double h, int dim) {
  if (dim != 2 && dim != 3)
    throw invalid_argument("dim must be 2 or 3");
  if (!(h > 0) || !(side > 0))
    throw invalid_argument("side and h must be positive");
  if (depth < 0 || depth > 3)
    throw invalid_argument("prefractal depth must be in [0,3]");
  double ell = side * std::pow(3.0, -depth);
  if (h > ell / 4.0 * (1.0 + 1e-12))
    throw invalid_argument(
        "h too coarse: need h <= ell/4 with ell = side/3^depth");

  GridDomain dom;
  dom.dim = dim;
  dom.h = h;
  dom.meta.kind = DomainKind::prefractal;
  dom.meta.side = side;
  dom.meta.depth = depth;
  dom.meta.ell = ell;
  dom.meta.base_size = side;

  // solid = base cube plus bump boxes from `depth` generations
  std::vector<Box> boxes;
  Box base;
  for (int a = 0; a < 3; ++a) {
    base.lo[a] = a < dim ? -0.5 * side : -1.0;
    base.hi[a] = a < dim ? 0.5 * side : 1.0;
  }
  boxes.push_back(base);
  std::vector<Square> squares;
  for (int a = 0; a < dim; ++a)
    for (int sgn : {-1, +1}) {
      Square sq{{0, 0, 0}, a, sgn, side};
      sq.center[a] = sgn * 0.5 * side;
      squares.push_back(sq);
    }
  double extent = 0.5 * side;
  for (int g = 0; g < depth; ++g) {
    grow_generation(dim, squares, boxes);
    extent += side * std::pow(3.0, -(g + 1));
  }

  AxisLattice lat = make_lattice(0.5 * side, extent, h);
  for (int a = 0; a < 3; ++a) {
    if (a < dim) {
      dom.n[a] = lat.count;
      dom.origin[a] = lat.offset + lat.jmin * h - 0.5 * h;
    } else {
      dom.n[a] = 1;
      dom.origin[a] = -0.5 * h;
    }
  }

  // rasterize each box directly; union via the bitmask
  dom.mask.assign(size_t((dom.grid_size() + 63) / 64), 0);
  double tol = kPlaneTol * h;
  for (const Box& b : boxes) {
    int lo[3], hi[3];
    bool empty = false;
    for (int a = 0; a < 3; ++a) {
      if (a >= dim) {
        lo[a] = 0;
        hi[a] = 0;
        continue;
      }
      lo[a] = int(std::ceil((b.lo[a] - tol - dom.origin[a]) / h - 0.5));
      hi[a] = int(std::floor((b.hi[a] + tol - dom.origin[a]) / h - 0.5));
      lo[a] = std::max(lo[a], 0);
      hi[a] = std::min(hi[a], dom.n[a] - 1);
      if (lo[a] > hi[a]) empty = true;
    }
    if (empty) continue;
    for (int iz = lo[2]; iz <= hi[2]; ++iz)
      for (int iy = lo[1]; iy <= hi[1]; ++iy)
        for (int ix = lo[0]; ix <= hi[0]; ++ix)
          set_bit(dom.mask, dom.grid_index(ix, iy, iz));
  }
  finalize_domain(dom);
  return dom;
}

void save_domain(const GridDomain& dom, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io_error("cannot create directory " + dir + ": " + ec.message());

  nlohmann::json j;
  j["schema"] = 1;
  j["dim"] = dom.dim;
  j["h"] = dom.h;
  j["n"] = {dom.n[0], dom.n[1], dom.n[2]};
  j["origin"] = {dom.origin[0], dom.origin[1], dom.origin[2]};
  j["meta"] = {
      {"kind", dom.meta.kind == DomainKind::ball ? "ball" : "prefractal"},
      {"radius", dom.meta.radius},
      {"side", dom.meta.side},
      {"depth", dom.meta.depth},
      {"ell", dom.meta.ell},
      {"base_size", dom.meta.base_size},
  };
  j["cells"] = dom.cell_count();
  j["hash"] = hex_u64(dom.content_hash);

  std::ofstream jf(dir + "/domain.json");
  if (!jf) throw io_error("cannot write " + dir + "/domain.json");
  jf << j.dump(2) << "\n";
  jf.close();

  std::ofstream bf(dir + "/interior.bits", std::ios::binary);
  if (!bf) throw io_error("cannot write " + dir + "/interior.bits");
  for (uint64_t w : dom.mask) {
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = (w >> (8 * i)) & 0xff;
    bf.write(reinterpret_cast<char*>(bytes), 8);
  }
  if (!bf) throw io_error("short write on " + dir + "/interior.bits");
}

GridDomain load_domain(const std::string& dir) {
  std::ifstream jf(dir + "/domain.json");
  if (!jf) throw io_error("cannot open " + dir + "/domain.json");
  nlohmann::json j;
  try {
    jf >> j;
  } catch (const nlohmann::json::exception& e) {
    throw io_error(std::string("bad domain.json: ") + e.what());
  }
  if (!j.contains("schema") || j["schema"].get<int>() != 1)
    throw io_error("domain.json: unsupported schema");

  GridDomain dom;
  try {
    dom.dim = j.at("dim").get<int>();
    dom.h = j.at("h").get<double>();
    for (int a = 0; a < 3; ++a) {
      dom.n[a] = j.at("n").at(size_t(a)).get<int>();
      dom.origin[a] = j.at("origin").at(size_t(a)).get<double>();
    }
    const auto& m = j.at("meta");
    std::string kind = m.at("kind").get<std::string>();
    if (kind == "ball")
      dom.meta.kind = DomainKind::ball;
    else if (kind == "prefractal")
      dom.meta.kind = DomainKind::prefractal;
    else
      throw io_error("domain.json: unknown kind " + kind);
    dom.meta.radius = m.at("radius").get<double>();
    dom.meta.side = m.at("side").get<double>();
    dom.meta.depth = m.at("depth").get<int>();
    dom.meta.ell = m.at("ell").get<double>();
    dom.meta.base_size = m.at("base_size").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw io_error(std::string("domain.json: missing or ill-typed field: ") +
                   e.what());
  }
  if (dom.dim != 2 && dom.dim != 3)
    throw io_error("domain.json: bad dim");
  if (!(dom.h > 0) || dom.n[0] < 1 || dom.n[1] < 1 || dom.n[2] < 1)
    throw io_error("domain.json: degenerate grid");

  std::ifstream bf(dir + "/interior.bits", std::ios::binary);
  if (!bf) throw io_error("cannot open " + dir + "/interior.bits");
  size_t words = size_t((dom.grid_size() + 63) / 64);
  dom.mask.assign(words, 0);
  std::vector<unsigned char> bytes(words * 8);
  bf.read(reinterpret_cast<char*>(bytes.data()),
          std::streamsize(bytes.size()));
  if (size_t(bf.gcount()) != bytes.size())
    throw io_error("interior.bits: unexpected size");
  for (size_t w = 0; w < words; ++w) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(bytes[w * 8 + size_t(i)]) << (8 * i);
    dom.mask[w] = v;
  }

  finalize_domain(dom);
  if (j.contains("cells") && j["cells"].get<int64_t>() != dom.cell_count())
    throw io_error("interior.bits does not match recorded cell count");
  if (j.contains("hash") && j["hash"].get<std::string>() != hex_u64(dom.content_hash))
    throw io_error("content hash mismatch (corrupted domain directory)");
  return dom;
}

BoundaryMeasure build_sigma(const GridDomain& dom) {
  BoundaryMeasure s;
  s.w.resize(dom.faces.size());
  double total = 0;
  for (size_t i = 0; i < dom.faces.size(); ++i) {
    s.w[i] = dom.faces[i].area * dom.faces[i].gamma;
    total += s.w[i];
  }
  s.total = total;
  return s;
}

double sigma_ball(const GridDomain& dom, const BoundaryMeasure& sigma,
                  const Point& q, double r) {
  if (!(r > 0)) throw invalid_argument("sigma_ball: r must be positive");
  if (sigma.w.size() != dom.faces.size())
    throw invalid_argument("sigma_ball: measure does not match domain");
  if (r >= dom.diam) return sigma.total;
  double s = 0;
  for (int32_t i : dom.faces_within(q, r)) s += sigma.w[size_t(i)];
  return s;
}

double index_I(const GridDomain& dom, const BoundaryMeasure& sigma, double a,
               const Point& q, double r) {
  if (a < 0) throw invalid_argument("index_I: a must be nonnegative");
  if (!(r > 0)) throw invalid_argument("index_I: r must be positive");
  return a * std::pow(r, 2 - dom.dim) * sigma_ball(dom, sigma, q, r);
}

double critical_rho_global(double a, double sigma_total, int dim) {
  if (dim < 3)
    throw invalid_argument("critical_rho_global needs dim >= 3");
  if (a < 0 || sigma_total <= 0)
    throw invalid_argument("critical_rho_global: bad a or sigma_total");
  return std::pow(a * sigma_total, 1.0 / (dim - 2));
}

CriticalRhoX critical_rho_x(const GridDomain& dom, const BoundaryMeasure& sigma,
                            double a, const Point& x) {
  if (a < 0) throw invalid_argument("critical_rho_x: a must be nonnegative");
  // nearest boundary face center; ties resolved by face order
  int32_t best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (int32_t i = 0; i < int32_t(dom.faces.size()); ++i) {
    double d = dist(dom.faces[size_t(i)].center, x);
    if (d < best_d - 1e-15) {
      best_d = d;
      best = i;
    }
  }
  CriticalRhoX out;
  out.face = best;
  out.q = dom.faces[size_t(best)].center;
  out.clamped_high = out.clamped_low = false;

  auto I = [&](double r) { return index_I(dom, sigma, a, out.q, r); };
  if (I(dom.diam) <= 1.0) {
    out.rho = dom.diam;
    out.clamped_high = true;
    return out;
  }
  double lo = dom.h / 4.0;
  if (I(lo) > 1.0) {
    out.rho = lo;  // boundary layer below grid resolution
    out.clamped_low = true;
    return out;
  }
  double hi = dom.diam;
  while (hi - lo > dom.h / 4.0) {
    double mid = 0.5 * (lo + hi);
    if (I(mid) <= 1.0)
      lo = mid;
    else
      hi = mid;
  }
  out.rho = lo;
  return out;
}

CorkscrewPoint corkscrew_point(const GridDomain& dom, const Point& q, double r) {
  if (!(r >= dom.h))
    throw invalid_argument("corkscrew_point: r below grid resolution");
  // scan cells in the bounding box of B(q,r), ascending ids
  int lo[3], hi[3];
  for (int a = 0; a < 3; ++a) {
    if (a >= dom.dim) {
      lo[a] = 0;
      hi[a] = 0;
      continue;
    }
    lo[a] = std::max(0, int(std::ceil((q[a] - r - dom.origin[a]) / dom.h - 0.5)));
    hi[a] = std::min(dom.n[a] - 1,
                     int(std::floor((q[a] + r - dom.origin[a]) / dom.h - 0.5)));
  }
  int32_t best = -1;
  double best_delta = -1;
  double r2 = r * r;
  for (int iz = lo[2]; iz <= hi[2]; ++iz)
    for (int iy = lo[1]; iy <= hi[1]; ++iy)
      for (int ix = lo[0]; ix <= hi[0]; ++ix) {
        int32_t c = dom.cell_at[size_t(dom.grid_index(ix, iy, iz))];
        if (c < 0) continue;
        Point ctr = dom.cell_center(c);
        double d2 = 0;
        for (int a = 0; a < 3; ++a) d2 += (ctr[a] - q[a]) * (ctr[a] - q[a]);
        if (d2 > r2 + 1e-15) continue;
        if (dom.delta[size_t(c)] > best_delta) {
          best_delta = dom.delta[size_t(c)];
          best = c;
        }
      }
  if (best < 0)
    throw invalid_argument("corkscrew_point: no interior cell inside B(q,r)");
  CorkscrewPoint out;
  out.cell = best;
  out.point = dom.cell_center(best);
  out.boundary_dist = best_delta;
  out.achieved_m = r / best_delta;
  return out;
}

MixedDimReport verify_mixed_dimension(const GridDomain& dom,
                                      const BoundaryMeasure& sigma,
                                      int samples, uint64_t seed, double r_lo,
                                      double r_hi) {
  if (samples < 8) throw invalid_argument("verify_mixed_dimension: samples < 8");
  if (r_lo <= 0) r_lo = std::max(2.0 * dom.h, std::min(dom.meta.ell, dom.diam / 8.0));
  if (r_hi <= 0) r_hi = std::min(dom.meta.base_size / 3.0, dom.diam / 3.0);
  if (!(r_hi > 1.2 * r_lo))
    throw invalid_argument("verify_mixed_dimension: degenerate radius range");

  Rng rng(seed);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n_fit = 0;
  double doubling = 0, homogeneity = 0;
  double dbl_r_lo = std::max(r_lo, 4.0 * dom.h);
  for (int i = 0; i < samples; ++i) {
    const Point& qc = dom.faces[size_t(rng.below(dom.faces.size()))].center;
    const Point& pc = dom.faces[size_t(rng.below(dom.faces.size()))].center;
    double r = rng.log_uniform(r_lo, r_hi);
    double sq = sigma_ball(dom, sigma, qc, r);
    double sp = sigma_ball(dom, sigma, pc, r);
    if (sq > 0) {
      double lx = std::log(r), ly = std::log(sq);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++n_fit;
    }
    if (sq > 0 && sp > 0)
      homogeneity = std::max(homogeneity, std::max(sq / sp, sp / sq));
    if (r >= dbl_r_lo && sq > 0) {
      double s2 = sigma_ball(dom, sigma, qc, 2.0 * r);
      doubling = std::max(doubling, s2 / sq);
    }
  }
  if (n_fit < 4)
    throw internal_error("verify_mixed_dimension: not enough usable samples");
  MixedDimReport rep;
  rep.fitted_d = (n_fit * sxy - sx * sy) / (n_fit * sxx - sx * sx);
  rep.doubling_const = doubling;
  rep.homogeneity_const = homogeneity;
  rep.r_lo = r_lo;
  rep.r_hi = r_hi;
  rep.samples = samples;
  return rep;
}

}  // namespace robinflux
