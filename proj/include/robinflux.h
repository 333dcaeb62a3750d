/* C interface to the Robin boundary-value laboratory.  All entry points
 * return rf_status; on failure rf_last_error() holds a message for the
 * calling thread until its next failing call. */
#ifndef ROBINFLUX_H
#define ROBINFLUX_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rf_status {
  RF_OK = 0,
  RF_EINVAL = 1,   /* bad arguments, geometry or config */
  RF_EIO = 2,      /* filesystem or serialization trouble */
  RF_ESOLVER = 3,  /* linear solver did not converge */
  RF_ECHECK = 4,   /* a theorem-level check failed */
  RF_EINTERNAL = 5 /* broken library invariant */
} rf_status;

/* Opaque voxelized domain with its boundary measure. */
typedef struct rf_domain rf_domain;

const char* rf_version(void);
const char* rf_last_error(void);

rf_status rf_domain_ball(double radius, double h, int dim, rf_domain** out);
rf_status rf_domain_prefractal(double side, int depth, double h, int dim,
                               rf_domain** out);
rf_status rf_domain_load(const char* dir, rf_domain** out);
rf_status rf_domain_save(const rf_domain* dom, const char* dir);
void rf_domain_release(rf_domain* dom);

rf_status rf_domain_cells(const rf_domain* dom, int32_t* out);
rf_status rf_domain_hash(const rf_domain* dom, uint64_t* out);
rf_status rf_domain_sigma_total(const rf_domain* dom, double* out);

/* Robin Green function G_a(x, y) with absorption a > 0 and the pole
 * snapped to the cell nearest y.  rel_tol <= 0 uses the default 1e-10. */
rf_status rf_green_value(const rf_domain* dom, double a, const double x[3],
                         const double y[3], double rel_tol, double* out);

/* Total flow F(a) of the absorption problem (source ball B(0,1) held at 1,
 * Robin absorption a outside).  a = INFINITY gives the fully absorbing
 * limit, a = 0 returns 0. */
rf_status rf_lung_flux(const rf_domain* dom, double a, double rel_tol,
                       double* out);

/* Runs one CLI subcommand: gen-domain | green-checks | hm-checks | flux |
 * report.  out_dir/seed/jobs/accept_const override the config when
 * non-NULL / nonzero; resume reuses cached flux solves.  On RF_OK,
 * *exit_code is the process exit code: 0 all checks pass, 1 infrastructure
 * error, 2 theorem-check failure. */
rf_status rf_run_command(const char* command, const char* config_path,
                         const char* out_dir, uint64_t seed, int jobs,
                         double accept_const, int resume, int* exit_code);

#ifdef __cplusplus
}
#endif

#endif /* ROBINFLUX_H */
