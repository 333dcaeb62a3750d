#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace robinflux {

using Point = std::array<double, 3>;

// One exposed voxel face: separates exactly one interior cell from one
// exterior cell.  Outward normal is sign * e_axis.  `area` is the raw face
// measure h^(dim-1); `gamma` is the surface-density factor used when the
// generating shape is curved (see build_sigma), 1 on axis-aligned shapes.
struct BoundaryFace {
  int32_t owner;
  int8_t axis;
  int8_t sign;
  Point center;
  double area;
  double gamma;
};

enum class DomainKind { ball, prefractal };

struct DomainMeta {
  DomainKind kind = DomainKind::ball;
  double radius = 0.0;  // ball
  double side = 0.0;    // prefractal base cube side L
  int depth = 0;        // prefractal generation count k
  double ell = 0.0;     // smallest smooth scale (L*3^-k; radius for balls)
  double base_size = 0.0;  // coarse extent (2R or L), used for sampling ranges
};

// Spatial bucket index over boundary-face centers; makes sigma-ball queries
// O(local) instead of O(total faces).
struct FaceIndex {
  Point lo{};
  double bucket = 0.0;
  std::array<int, 3> nb{1, 1, 1};
  std::vector<std::vector<int32_t>> buckets;

  // ids of faces with |center - q| < r, ascending
  std::vector<int32_t> query(const std::vector<BoundaryFace>& faces,
                             const Point& q, double r) const;
};

// Uniform Cartesian voxel discretization of a solid.  Cells are identified
// by their grid linear index (x fastest); only interior cells carry ids.
class GridDomain {
 public:
  int dim = 3;
  double h = 0.0;
  std::array<int, 3> n{1, 1, 1};   // grid extent in cells (n[2]=1 in 2-D)
  Point origin{};                  // corner of grid cell (0,0,0)
  DomainMeta meta;

  std::vector<uint64_t> mask;      // interior bitmask over the full grid
  std::vector<int64_t> cells;      // grid index per interior cell, ascending
  std::vector<int32_t> cell_at;    // grid index -> cell id, -1 if exterior
  std::vector<BoundaryFace> faces;
  std::vector<double> delta;       // distance to boundary per interior cell
  double diam = 0.0;               // diameter of the boundary (face centers)
  FaceIndex face_index;
  uint64_t content_hash = 0;       // over header + interior bitmask

  int64_t grid_size() const {
    return int64_t(n[0]) * int64_t(n[1]) * int64_t(n[2]);
  }
  int64_t grid_index(int ix, int iy, int iz) const {
    return (int64_t(iz) * n[1] + iy) * n[0] + ix;
  }
  bool interior(int64_t g) const {
    return (mask[size_t(g >> 6)] >> (g & 63)) & 1u;
  }
  Point cell_center(int32_t cell) const {
    int64_t g = cells[size_t(cell)];
    int ix = int(g % n[0]);
    int iy = int((g / n[0]) % n[1]);
    int iz = int(g / (int64_t(n[0]) * n[1]));
    return {origin[0] + (ix + 0.5) * h, origin[1] + (iy + 0.5) * h,
            origin[2] + (iz + 0.5) * h};
  }
  int32_t cell_count() const { return int32_t(cells.size()); }

  // nearest interior cell to p; throws if nothing within `max_dist`
  // (default: a generous multiple of h)
  int32_t cell_near(const Point& p, double max_dist = -1.0) const;

  // ids of faces with |center - q| < r
  std::vector<int32_t> faces_within(const Point& q, double r) const {
    return face_index.query(faces, q, r);
  }
};

// Builders.  dim must be 2 or 3 (2 exists for cheap smoke runs only; the
// estimates downstream assume dim >= 3).  Throws invalid_argument on
// unresolved geometry: ball needs h <= R/4, prefractal needs h <= ell/4,
// depth <= 3, and the interior cell graph must come out connected.
GridDomain build_ball_domain(double radius, double h, int dim);
GridDomain build_prefractal_domain(double side, int depth, double h, int dim);

// Serialization: directory with domain.json (header) + interior.bits
// (raw bitmask).  Faces, distances and hashes are re-derived on load.
void save_domain(const GridDomain& dom, const std::string& dir);
GridDomain load_domain(const std::string& dir);

// Boundary measure sigma: per-face weights + total.  Weight = area * gamma;
// gamma corrects the voxel staircase against the generator's smooth normal
// (|n-hat . e_axis| for balls) and is identically 1 on axis-aligned shapes,
// where the face-area sum is already exact.
struct BoundaryMeasure {
  std::vector<double> w;
  double total = 0.0;
};
BoundaryMeasure build_sigma(const GridDomain& dom);

// sigma(boundary ∩ B(q,r)); r >= diam returns the total.
double sigma_ball(const GridDomain& dom, const BoundaryMeasure& sigma,
                  const Point& q, double r);

// Scale-invariant boundary index I_q(r) = a * r^(2-dim) * sigma(B(q,r)).
double index_I(const GridDomain& dom, const BoundaryMeasure& sigma, double a,
               const Point& q, double r);

// Global critical scale rho = (a * sigma_total)^(1/(dim-2)); dim >= 3.
double critical_rho_global(double a, double sigma_total, int dim);

// Per-point critical scale: Q_X = nearest boundary face center to x,
// rho_x = sup{ rho in (0,diam] : I_{Q_X}(rho) <= 1 } found by bisection
// (bracket tolerance h/4, clamped to diam when the index never exceeds 1,
// floored at h/4 when it always does).
struct CriticalRhoX {
  double rho;
  Point q;       // nearest boundary point used
  int32_t face;  // its face id
  bool clamped_high;
  bool clamped_low;
};
CriticalRhoX critical_rho_x(const GridDomain& dom, const BoundaryMeasure& sigma,
                            double a, const Point& x);

// Interior point A_r(q): cell center in B(q,r) maximizing distance to the
// boundary, lexicographic tie-breaking.  achieved_m = r / delta(A).
struct CorkscrewPoint {
  int32_t cell;
  Point point;
  double boundary_dist;
  double achieved_m;
};
CorkscrewPoint corkscrew_point(const GridDomain& dom, const Point& q, double r);

// Sampled mixed-dimension diagnostics of the boundary measure.
struct MixedDimReport {
  double fitted_d = 0.0;        // log-log slope of sigma(B(q,r)) vs r
  double doubling_const = 0.0;  // max sigma(B(q,2r))/sigma(B(q,r))
  double homogeneity_const = 0.0;  // max sigma(B(q,r))/sigma(B(p,r))
  double r_lo = 0.0, r_hi = 0.0;
  int samples = 0;
};
// r_lo/r_hi <= 0 picks defaults tied to meta.ell and diam.
MixedDimReport verify_mixed_dimension(const GridDomain& dom,
                                      const BoundaryMeasure& sigma,
                                      int samples, uint64_t seed,
                                      double r_lo = 0.0, double r_hi = 0.0);

}  // namespace robinflux
