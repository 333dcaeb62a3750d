#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "robinflux/geometry.hpp"

namespace robinflux {

// Symmetric sparse operator in CSR form, rows/cols over interior cell ids
// (or free ids after pinning).  Columns ascending within each row.
struct SparseOperator {
  int32_t n = 0;
  std::vector<int64_t> row_ptr;
  std::vector<int32_t> col;
  std::vector<double> val;

  void matvec(const double* x, double* y) const;
  double quad(const std::vector<double>& u) const;  // u^T A u, fixed order
  // documented text export: "row col value\n" lines, row-major, %.17g
  void write_triplets(std::ostream& os) const;
};

// Two-point flux finite-volume stiffness on the voxel grid: off-diagonal
// -h^(dim-2) per interior face, diagonal = h^(dim-2) * (#interior
// neighbors).  Row sums vanish, so constants are annihilated exactly.
SparseOperator assemble_stiffness(const GridDomain& dom);

// Diagonal boundary mass: per cell, the sigma-weight sum of its faces.
std::vector<double> assemble_boundary_mass(const GridDomain& dom,
                                           const BoundaryMeasure& sigma);

// Robin operator L + a*M (SPD for a > 0).
SparseOperator robin_operator(const SparseOperator& L,
                              const std::vector<double>& bmass, double a);

// Pinned reduction of a full-cell operator: unknowns = cells not in
// `pinned`; couplings into pinned cells move to the right-hand side.
struct ReducedSystem {
  SparseOperator A;
  std::vector<int32_t> cell_of_free;   // free idx -> cell id
  std::vector<int32_t> free_of_cell;   // cell id -> free idx or -1
  std::vector<int32_t> pinned;         // ascending cell ids
  std::vector<double> pinned_value;    // parallel to `pinned`
  std::vector<double> rhs_base;        // -A_fp * pinned_value, free idx space

  // scatter a free-space solution into a full cell field (pinned values in)
  std::vector<double> expand(const std::vector<double>& u_free) const;
};
ReducedSystem reduce_pinned(const GridDomain& dom, const SparseOperator& A,
                            const std::vector<int32_t>& pinned_cells,
                            const std::vector<double>& pinned_values);
ReducedSystem reduce_pinned(const GridDomain& dom, const SparseOperator& A,
                            const std::vector<int32_t>& pinned_cells,
                            double pinned_value);

// cells owning at least one boundary face, ascending
std::vector<int32_t> boundary_adjacent_cells(const GridDomain& dom);

// cells whose centers lie in the closed ball B(c,r), ascending
std::vector<int32_t> cells_in_ball(const GridDomain& dom, const Point& c,
                                   double r);

// Dirichlet problem: stiffness with every boundary-adjacent cell pinned to 0.
ReducedSystem dirichlet_system(const GridDomain& dom, const SparseOperator& L);

// Unit point mass at the cell nearest to y; pairs to phi(y) against test
// fields, matching the Green identity normalization.
std::vector<double> point_source_rhs(const GridDomain& dom, const Point& y);

// Robin data: rhs_i = a * sum of sigma weights of i's faces in `face_ids`.
std::vector<double> indicator_boundary_rhs(const GridDomain& dom,
                                           const BoundaryMeasure& sigma,
                                           const std::vector<int32_t>& face_ids,
                                           double a);

// Interior source B(0,1) held at 1 for the total-flow problem; rejects
// h > 0.5 (source ball unresolved).  Returns the pinned cells.
std::vector<int32_t> lung_source_cells(const GridDomain& dom);

}  // namespace robinflux
