#include "robinflux/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "robinflux/errors.hpp"

namespace robinflux {

namespace {

// grid-index strides of the six neighbors, ascending so CSR columns come
// out sorted without an extra pass
void neighbor_strides(const GridDomain& dom, int64_t s[6], int* count) {
  const int64_t sx = 1;
  const int64_t sy = dom.n[0];
  const int64_t sz = int64_t(dom.n[0]) * dom.n[1];
  int k = 0;
  if (dom.dim == 3) s[k++] = -sz;
  s[k++] = -sy;
  s[k++] = -sx;
  s[k++] = sx;
  s[k++] = sy;
  if (dom.dim == 3) s[k++] = sz;
  *count = k;
}

}  // namespace

void SparseOperator::matvec(const double* x, double* y) const {
  for (int32_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
      acc += val[k] * x[col[k]];
    y[i] = acc;
  }
}

double SparseOperator::quad(const std::vector<double>& u) const {
  if (int32_t(u.size()) != n)
    throw invalid_argument("quad: field size mismatch");
  double acc = 0.0;
  for (int32_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (int64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
      row += val[k] * u[col[k]];
    acc += u[i] * row;
  }
  return acc;
}

void SparseOperator::write_triplets(std::ostream& os) const {
  char buf[80];
  for (int32_t i = 0; i < n; ++i)
    for (int64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      std::snprintf(buf, sizeof buf, "%d %d %.17g\n", i, col[k], val[k]);
      os << buf;
    }
}

SparseOperator assemble_stiffness(const GridDomain& dom) {
  const double t = std::pow(dom.h, dom.dim - 2);  // face transmissibility
  int64_t strides[6];
  int ns = 0;
  neighbor_strides(dom, strides, &ns);

  SparseOperator L;
  L.n = dom.cell_count();
  L.row_ptr.assign(size_t(L.n) + 1, 0);

  // first pass counts, second fills; neighbor cell ids are ascending in
  // stride order so the diagonal slots into the middle
  std::vector<int32_t> nbr(size_t(L.n) * ns, -1);
  for (int32_t c = 0; c < L.n; ++c) {
    int64_t g = dom.cells[c];
    int deg = 0;
    for (int k = 0; k < ns; ++k) {
      // stride moves stay inside the padded box because of the exterior ring
      int32_t j = dom.cell_at[size_t(g + strides[k])];
      nbr[size_t(c) * ns + k] = j;
      if (j >= 0) ++deg;
    }
    L.row_ptr[c + 1] = L.row_ptr[c] + deg + 1;
  }
  L.col.resize(size_t(L.row_ptr[L.n]));
  L.val.resize(size_t(L.row_ptr[L.n]));
  for (int32_t c = 0; c < L.n; ++c) {
    int64_t k = L.row_ptr[c];
    int deg = 0;
    bool diag_done = false;
    for (int m = 0; m < ns; ++m) {
      int32_t j = nbr[size_t(c) * ns + m];
      if (j < 0) continue;
      if (j > c && !diag_done) {
        L.col[k] = c;
        ++k;  // diagonal placeholder, value patched below
        diag_done = true;
      }
      L.col[k] = j;
      L.val[k] = -t;
      ++k;
      ++deg;
    }
    if (!diag_done) L.col[k++] = c;
    // patch the diagonal
    for (int64_t q = L.row_ptr[c]; q < L.row_ptr[c + 1]; ++q)
      if (L.col[q] == c) L.val[q] = t * deg;
  }
  return L;
}

std::vector<double> assemble_boundary_mass(const GridDomain& dom,
                                           const BoundaryMeasure& sigma) {
  if (sigma.w.size() != dom.faces.size())
    throw invalid_argument("boundary mass: measure does not match domain");
  std::vector<double> m(size_t(dom.cell_count()), 0.0);
  for (size_t f = 0; f < dom.faces.size(); ++f)
    m[size_t(dom.faces[f].owner)] += sigma.w[f];
  return m;
}

SparseOperator robin_operator(const SparseOperator& L,
                              const std::vector<double>& bmass, double a) {
  if (!(a > 0.0) || !std::isfinite(a))
    throw invalid_argument("robin operator needs finite a > 0");
  if (int32_t(bmass.size()) != L.n)
    throw invalid_argument("robin operator: boundary mass size mismatch");
  SparseOperator A = L;
  for (int32_t i = 0; i < A.n; ++i)
    for (int64_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
      if (A.col[k] == i) A.val[k] += a * bmass[size_t(i)];
  return A;
}

ReducedSystem reduce_pinned(const GridDomain& dom, const SparseOperator& A,
                            const std::vector<int32_t>& pinned_cells,
                            const std::vector<double>& pinned_values) {
  if (A.n != dom.cell_count())
    throw invalid_argument("reduce_pinned: operator does not match domain");
  if (pinned_cells.size() != pinned_values.size())
    throw invalid_argument("reduce_pinned: values do not match pinned cells");
  if (pinned_cells.empty())
    throw invalid_argument("reduce_pinned: nothing pinned");

  ReducedSystem R;
  std::vector<double> pin_of_cell(size_t(A.n),
                                  std::numeric_limits<double>::quiet_NaN());
  std::vector<char> is_pinned(size_t(A.n), 0);
  for (size_t i = 0; i < pinned_cells.size(); ++i) {
    int32_t c = pinned_cells[i];
    if (c < 0 || c >= A.n) throw invalid_argument("reduce_pinned: bad cell id");
    if (is_pinned[size_t(c)])
      throw invalid_argument("reduce_pinned: duplicate pinned cell");
    is_pinned[size_t(c)] = 1;
    pin_of_cell[size_t(c)] = pinned_values[i];
  }
  R.pinned = pinned_cells;
  R.pinned_value = pinned_values;
  std::sort(R.pinned.begin(), R.pinned.end());
  // keep value order aligned with sorted ids
  for (size_t i = 0; i < R.pinned.size(); ++i)
    R.pinned_value[i] = pin_of_cell[size_t(R.pinned[i])];

  R.free_of_cell.assign(size_t(A.n), -1);
  for (int32_t c = 0; c < A.n; ++c)
    if (!is_pinned[size_t(c)]) {
      R.free_of_cell[size_t(c)] = int32_t(R.cell_of_free.size());
      R.cell_of_free.push_back(c);
    }
  if (R.cell_of_free.empty())
    throw invalid_argument("reduce_pinned: no unknowns left");

  const int32_t nf = int32_t(R.cell_of_free.size());
  R.A.n = nf;
  R.A.row_ptr.assign(size_t(nf) + 1, 0);
  R.rhs_base.assign(size_t(nf), 0.0);
  for (int32_t r = 0; r < nf; ++r) {
    int32_t c = R.cell_of_free[size_t(r)];
    int64_t cnt = 0;
    for (int64_t k = A.row_ptr[c]; k < A.row_ptr[c + 1]; ++k)
      if (!is_pinned[size_t(A.col[k])]) ++cnt;
    R.A.row_ptr[r + 1] = R.A.row_ptr[r] + cnt;
  }
  R.A.col.resize(size_t(R.A.row_ptr[nf]));
  R.A.val.resize(size_t(R.A.row_ptr[nf]));
  for (int32_t r = 0; r < nf; ++r) {
    int32_t c = R.cell_of_free[size_t(r)];
    int64_t k2 = R.A.row_ptr[r];
    for (int64_t k = A.row_ptr[c]; k < A.row_ptr[c + 1]; ++k) {
      int32_t j = A.col[k];
      if (is_pinned[size_t(j)]) {
        R.rhs_base[size_t(r)] -= A.val[k] * pin_of_cell[size_t(j)];
      } else {
        R.A.col[k2] = R.free_of_cell[size_t(j)];
        R.A.val[k2] = A.val[k];
        ++k2;
      }
    }
  }
  return R;
}

ReducedSystem reduce_pinned(const GridDomain& dom, const SparseOperator& A,
                            const std::vector<int32_t>& pinned_cells,
                            double pinned_value) {
  return reduce_pinned(dom, A, pinned_cells,
                       std::vector<double>(pinned_cells.size(), pinned_value));
}

std::vector<double> ReducedSystem::expand(
    const std::vector<double>& u_free) const {
  if (u_free.size() != cell_of_free.size())
    throw invalid_argument("expand: free field size mismatch");
  std::vector<double> u(free_of_cell.size(), 0.0);
  for (size_t r = 0; r < cell_of_free.size(); ++r)
    u[size_t(cell_of_free[r])] = u_free[r];
  for (size_t i = 0; i < pinned.size(); ++i)
    u[size_t(pinned[i])] = pinned_value[i];
  return u;
}

std::vector<int32_t> boundary_adjacent_cells(const GridDomain& dom) {
  std::vector<char> seen(size_t(dom.cell_count()), 0);
  for (const auto& f : dom.faces) seen[size_t(f.owner)] = 1;
  std::vector<int32_t> out;
  for (int32_t c = 0; c < dom.cell_count(); ++c)
    if (seen[size_t(c)]) out.push_back(c);
  return out;
}

std::vector<int32_t> cells_in_ball(const GridDomain& dom, const Point& c,
                                   double r) {
  if (!(r > 0.0)) throw invalid_argument("cells_in_ball: r must be positive");
  std::vector<int32_t> out;
  const double r2 = r * r;
  for (int32_t id = 0; id < dom.cell_count(); ++id) {
    Point p = dom.cell_center(id);
    double d2 = 0.0;
    for (int k = 0; k < 3; ++k) d2 += (p[k] - c[k]) * (p[k] - c[k]);
    if (d2 <= r2) out.push_back(id);
  }
  return out;
}

ReducedSystem dirichlet_system(const GridDomain& dom,
                               const SparseOperator& L) {
  return reduce_pinned(dom, L, boundary_adjacent_cells(dom), 0.0);
}

std::vector<double> point_source_rhs(const GridDomain& dom, const Point& y) {
  int32_t c = dom.cell_near(y);
  std::vector<double> b(size_t(dom.cell_count()), 0.0);
  b[size_t(c)] = 1.0;
  return b;
}

std::vector<double> indicator_boundary_rhs(const GridDomain& dom,
                                           const BoundaryMeasure& sigma,
                                           const std::vector<int32_t>& face_ids,
                                           double a) {
  if (!(a > 0.0) || !std::isfinite(a))
    throw invalid_argument("indicator rhs needs finite a > 0");
  std::vector<double> b(size_t(dom.cell_count()), 0.0);
  for (int32_t f : face_ids) {
    if (f < 0 || f >= int32_t(dom.faces.size()))
      throw invalid_argument("indicator rhs: bad face id");
    b[size_t(dom.faces[f].owner)] += a * sigma.w[size_t(f)];
  }
  return b;
}

std::vector<int32_t> lung_source_cells(const GridDomain& dom) {
  if (dom.h > 0.5)
    throw invalid_argument(
        "source ball B(0,1) needs h <= 0.5 to be resolved");
  std::vector<int32_t> cells = cells_in_ball(dom, Point{0, 0, 0}, 1.0);
  if (cells.empty())
    throw invalid_argument("source ball B(0,1) contains no cell centers");
  return cells;
}

}  // namespace robinflux
