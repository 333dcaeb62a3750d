#include "robinflux.h"

#include <cmath>
#include <cstring>
#include <memory>
#include <string>

#include "robinflux/errors.hpp"
#include "robinflux/flux.hpp"
#include "robinflux/geometry.hpp"
#include "robinflux/green.hpp"
#include "robinflux/version.hpp"
#include "runner.hpp"

using namespace robinflux;

struct rf_domain {
  GridDomain dom;
  BoundaryMeasure sigma;
};

namespace {

thread_local std::string t_last_error;

rf_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return RF_EINVAL;
    case ErrorKind::io: return RF_EIO;
    case ErrorKind::solver: return RF_ESOLVER;
    case ErrorKind::check: return RF_ECHECK;
    case ErrorKind::internal: return RF_EINTERNAL;
  }
  return RF_EINTERNAL;
}

template <typename Fn>
rf_status guarded(Fn&& fn) {
  try {
    fn();
    return RF_OK;
  } catch (const Error& e) {
    t_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return RF_EINTERNAL;
  }
}

rf_status bad_arg(const char* msg) {
  t_last_error = msg;
  return RF_EINVAL;
}

rf_status wrap_domain(GridDomain&& dom, rf_domain** out) {
  auto handle = std::make_unique<rf_domain>();
  handle->dom = std::move(dom);
  handle->sigma = build_sigma(handle->dom);
  *out = handle.release();
  return RF_OK;
}

SolverConfig solver_config(double rel_tol) {
  SolverConfig cfg;
  if (rel_tol > 0) cfg.rel_tol = rel_tol;
  return cfg;
}

}  // namespace

extern "C" {

const char* rf_version(void) { return kVersion; }

const char* rf_last_error(void) { return t_last_error.c_str(); }

rf_status rf_domain_ball(double radius, double h, int dim, rf_domain** out) {
  if (!out) return bad_arg("rf_domain_ball: out is NULL");
  *out = nullptr;
  return guarded([&] { wrap_domain(build_ball_domain(radius, h, dim), out); });
}

rf_status rf_domain_prefractal(double side, int depth, double h, int dim,
                               rf_domain** out) {
  if (!out) return bad_arg("rf_domain_prefractal: out is NULL");
  *out = nullptr;
  return guarded(
      [&] { wrap_domain(build_prefractal_domain(side, depth, h, dim), out); });
}

rf_status rf_domain_load(const char* dir, rf_domain** out) {
  if (!out) return bad_arg("rf_domain_load: out is NULL");
  if (!dir) return bad_arg("rf_domain_load: dir is NULL");
  *out = nullptr;
  return guarded([&] { wrap_domain(load_domain(dir), out); });
}

rf_status rf_domain_save(const rf_domain* dom, const char* dir) {
  if (!dom) return bad_arg("rf_domain_save: domain is NULL");
  if (!dir) return bad_arg("rf_domain_save: dir is NULL");
  return guarded([&] { save_domain(dom->dom, dir); });
}

void rf_domain_release(rf_domain* dom) { delete dom; }

rf_status rf_domain_cells(const rf_domain* dom, int32_t* out) {
  if (!dom || !out) return bad_arg("rf_domain_cells: NULL argument");
  *out = dom->dom.cell_count();
  return RF_OK;
}

rf_status rf_domain_hash(const rf_domain* dom, uint64_t* out) {
  if (!dom || !out) return bad_arg("rf_domain_hash: NULL argument");
  *out = dom->dom.content_hash;
  return RF_OK;
}

rf_status rf_domain_sigma_total(const rf_domain* dom, double* out) {
  if (!dom || !out) return bad_arg("rf_domain_sigma_total: NULL argument");
  *out = dom->sigma.total;
  return RF_OK;
}

rf_status rf_green_value(const rf_domain* dom, double a, const double x[3],
                         const double y[3], double rel_tol, double* out) {
  if (!dom || !x || !y || !out) return bad_arg("rf_green_value: NULL argument");
  *out = 0.0;
  return guarded([&] {
    Point px{x[0], x[1], x[2]};
    Point py{y[0], y[1], y[2]};
    SolverConfig cfg = solver_config(rel_tol);
    GreenField gf = std::isinf(a) ? dirichlet_green(dom->dom, py, cfg)
                                  : robin_green(dom->dom, dom->sigma, a, py, cfg);
    *out = gf.values[size_t(dom->dom.cell_near(px))];
  });
}

rf_status rf_lung_flux(const rf_domain* dom, double a, double rel_tol,
                       double* out) {
  if (!dom || !out) return bad_arg("rf_lung_flux: NULL argument");
  *out = 0.0;
  return guarded([&] {
    SolverConfig cfg = solver_config(rel_tol);
    *out = std::isinf(a) ? dirichlet_flux(dom->dom, dom->sigma, cfg).flux
                         : solve_lung(dom->dom, dom->sigma, a, cfg).flux;
  });
}

rf_status rf_run_command(const char* command, const char* config_path,
                         const char* out_dir, uint64_t seed, int jobs,
                         double accept_const, int resume, int* exit_code) {
  if (!command || !exit_code) return bad_arg("rf_run_command: NULL argument");
  *exit_code = 1;
  return guarded([&] {
    RunnerOverrides ov;
    if (out_dir) ov.out = out_dir;
    ov.seed = seed;
    ov.jobs = jobs;
    ov.accept_const = accept_const;
    ov.resume = resume != 0;
    *exit_code =
        run_command(command, config_path ? config_path : "", ov);
  });
}

}  // extern "C"
