// Acceptance gate: evaluates the nine shipping criteria end to end and
// prints one PASS/FAIL line each.  Exit code = number of failed criteria.
// Audit artifacts (sample CSVs, curves) land under argv[1], default
// "acceptance_out".
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "robinflux/errors.hpp"
#include "robinflux/flux.hpp"
#include "robinflux/geometry.hpp"
#include "robinflux/green.hpp"
#include "robinflux/measure.hpp"
#include "runner.hpp"

using namespace robinflux;
namespace fs = std::filesystem;

namespace {

std::string g_out;
int g_failed = 0;

double now_ms() {
  using namespace std::chrono;
  return double(duration_cast<microseconds>(
                    steady_clock::now().time_since_epoch())
                    .count()) /
         1000.0;
}

std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

void record(int id, const char* name, bool pass, double ms,
            const std::string& detail) {
  if (!pass) ++g_failed;
  std::printf("[%s] criterion %d  %-22s %7.0f ms  %s\n",
              pass ? "PASS" : "FAIL", id, name, ms, detail.c_str());
  std::fflush(stdout);
}

std::vector<double> log_grid(double lo, double hi, int count) {
  std::vector<double> g(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i)
    g[size_t(i)] = lo * std::pow(hi / lo, double(i) / double(count - 1));
  return g;
}

double ball_flux_oracle(double a) { return 4.0 * M_PI / (0.75 + 1.0 / (16.0 * a)); }

void write_sample_csv(const std::string& name,
                      const std::vector<SampleRow>& rows) {
  FILE* f = std::fopen((g_out + "/" + name).c_str(), "w");
  if (!f) throw io_error("cannot write " + name);
  std::fprintf(f, "qx,qy,qz,r,lhs,rhs,ratio,pass,skipped,clipped\n");
  for (const auto& r : rows)
    std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d,%d\n",
                 r.q[0], r.q[1], r.q[2], r.r, r.lhs, r.rhs, r.ratio,
                 r.ok ? 1 : 0, r.skipped ? 1 : 0, r.clipped ? 1 : 0);
  std::fclose(f);
}

void write_curve_csv(const std::string& name, const FluxCurve& c) {
  FILE* f = std::fopen((g_out + "/" + name).c_str(), "w");
  if (!f) throw io_error("cannot write " + name);
  std::fprintf(f, "a,F,F_inf_minus_F,J\n");
  for (const auto& p : c.points)
    std::fprintf(f, "%.17g,%.17g,%.17g,%.17g\n", p.a, p.f, p.f_gap, p.energy);
  std::fclose(f);
}

bool files_identical(const fs::path& a, const fs::path& b) {
  std::error_code ec;
  auto sa = fs::file_size(a, ec);
  if (ec) return false;
  auto sb = fs::file_size(b, ec);
  if (ec || sa != sb) return false;
  FILE* fa = std::fopen(a.string().c_str(), "rb");
  FILE* fb = std::fopen(b.string().c_str(), "rb");
  bool same = fa && fb;
  while (same) {
    char ba[4096], bb[4096];
    size_t na = std::fread(ba, 1, sizeof ba, fa);
    size_t nb = std::fread(bb, 1, sizeof bb, fb);
    same = na == nb && std::memcmp(ba, bb, na) == 0;
    if (na == 0) break;
  }
  if (fa) std::fclose(fa);
  if (fb) std::fclose(fb);
  return same;
}

}  // namespace

int main(int argc, char** argv) {
  g_out = argc > 1 ? argv[1] : "acceptance_out";
  fs::create_directories(g_out);
  std::printf("acceptance gate, artifacts in %s\n", g_out.c_str());

  GridDomain ball = build_ball_domain(4.0, 0.125, 3);
  BoundaryMeasure sball = build_sigma(ball);
  const Point origin{0.0, 0.0, 0.0};
  std::vector<std::pair<std::string, double>> certs;

  // ---- 1: ball Green oracle, and the Robin fields reused below ----------
  double t0 = now_ms();
  std::vector<double> green_a{0.1, 1.0, 10.0};
  std::vector<GreenField> gr;
  double worst_oracle = 0.0;
  {
    FILE* f = std::fopen((g_out + "/green_oracle.csv").c_str(), "w");
    std::fprintf(f, "a,x,value,oracle,rel_err\n");
    for (double a : green_a) {
      gr.push_back(robin_green(ball, sball, a, origin));
      certs.emplace_back(fmt("ball robin a=%g", a), gr.back().flux_certificate);
      for (double x : {1.5, 2.0, 3.0}) {
        double v = gr.back().values[size_t(ball.cell_near({x, 0.0, 0.0}))];
        double oracle = ball_oracle_green(3, 4.0, a, x);
        double err = std::fabs(v - oracle) / oracle;
        worst_oracle = std::max(worst_oracle, err);
        std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g\n", a, x, v, oracle,
                     err);
      }
    }
    std::fclose(f);
  }
  record(1, "ball green oracle", worst_oracle <= 0.2, now_ms() - t0,
         fmt("worst rel err %.4f (tol 0.2) over a in {0.1,1,10}, |X| in "
             "{1.5,2,3}",
             worst_oracle));

  // ---- 3: order chains (greens from criterion 1 plus lung fields) -------
  t0 = now_ms();
  int64_t order_viol = 0;
  std::string order_note;
  {
    GreenField gd = dirichlet_green(ball, origin);
    // strict order G_D < G_R^10 < G_R^1 < G_R^0.1 cell by cell
    for (size_t i = 0; i < gd.values.size(); ++i) {
      if (!(gd.values[i] < gr[2].values[i])) ++order_viol;
      if (!(gr[2].values[i] < gr[1].values[i])) ++order_viol;
      if (!(gr[1].values[i] < gr[0].values[i])) ++order_viol;
    }
    MonotonicityReport mono = monotonicity_check(ball, sball, origin, green_a);
    order_viol += mono.violations;
    LungSolution u_inf = dirichlet_flux(ball, sball);
    LungSolution u_b = solve_lung(ball, sball, 2.0);
    LungSolution u_a = solve_lung(ball, sball, 0.5);
    int64_t lung_viol = 0;
    for (size_t i = 0; i < u_inf.field.size(); ++i) {
      if (!(u_inf.field[i] <= u_b.field[i])) ++lung_viol;
      if (!(u_b.field[i] <= u_a.field[i])) ++lung_viol;
      if (!(u_a.field[i] <= 1.0 + 1e-12)) ++lung_viol;
    }
    order_viol += lung_viol;
    order_note = fmt("0 green + 0 lung violations over %zu cells; min "
                     "adjacent margin %.3g",
                     gd.values.size(), mono.min_margin_adjacent);
    if (order_viol > 0)
      order_note = fmt("%" PRId64 " violations", order_viol);
  }
  record(3, "order chain", order_viol == 0, now_ms() - t0, order_note);

  // ---- 4: ball flux curve against the shell formula ---------------------
  t0 = now_ms();
  {
    FluxCurve curve = flux_curve(ball, sball, log_grid(1e-3, 1e3, 17), false);
    write_curve_csv("ball_curve.csv", curve);
    double worst_f = 0.0;
    for (const auto& p : curve.points)
      worst_f = std::max(
          worst_f, std::fabs(p.f - ball_flux_oracle(p.a)) / ball_flux_oracle(p.a));
    bool c_oracle = worst_f <= 0.10;

    PhaseWindows win;
    win.neumann_max = 1e-2;  // 1/sigma leaves < 3 grid points on this span
    win.dahlberg_min = 10.0;
    PhaseReport ph = phase_transition_report(curve, win);
    bool c_small = std::fabs(ph.neumann_slope - 1.0) <= 0.10;
    bool c_large = std::fabs(ph.dahlberg_slope + 1.0) <= 0.10;

    // plateau clause as specified: F/F(inf) >= 0.9 for every grid a >=
    // 10/sigma_total.  The target formula itself gives 0.374 at that
    // threshold (0.9 first holds near a = 0.75), so this clause cannot
    // pass while the oracle clause does; evaluated faithfully and
    // reported for the record.
    double thresh = 10.0 / curve.sigma_total;
    double plateau_min = 2.0;
    for (const auto& p : curve.points)
      if (p.a >= thresh)
        plateau_min = std::min(plateau_min, p.f / curve.f_infinity);
    bool c_plateau = plateau_min >= 0.9;

    bool pass = c_oracle && c_small && c_large && c_plateau;
    std::string detail =
        fmt("oracle worst %.3f%s, small-a slope %.3f%s, gap slope %.3f%s, "
            "plateau min F/F(inf) %.3f for a >= 10/sigma = %.3g%s",
            worst_f, c_oracle ? "" : " (FAIL)", ph.neumann_slope,
            c_small ? "" : " (FAIL)", ph.dahlberg_slope,
            c_large ? "" : " (FAIL)", plateau_min, thresh,
            c_plateau ? ""
                      : " (FAIL; target formula yields 0.374 there, >= 0.9 "
                        "needs a >= 0.75)");
    record(4, "ball flux curve", pass, now_ms() - t0, detail);
  }

  // ---- 5: prefractal phase transition ------------------------------------
  t0 = now_ms();
  double side = 10.0;
  double ell2 = side / std::pow(3.0, 2);
  GridDomain pre2 = build_prefractal_domain(side, 2, ell2 / 4.0, 3);
  BoundaryMeasure spre2 = build_sigma(pre2);
  {
    certs.emplace_back(
        "prefractal robin a=1e-3",
        robin_green(pre2, spre2, 1e-3, origin).flux_certificate);
    certs.emplace_back(
        "prefractal robin a=0.1",
        robin_green(pre2, spre2, 0.1, origin).flux_certificate);

    double lo = 1e-2 / spre2.total;
    double hi = 1e2 / ell2;
    FluxCurve curve = flux_curve(pre2, spre2, log_grid(lo, hi, 17), true);
    write_curve_csv("prefractal_curve.csv", curve);

    bool c_mono = curve.monotone_violations == 0 && curve.cap_violations == 0;
    double ab = 1.0 / curve.sigma_total;
    double neu_lo = 1e9, neu_hi = 0.0, pl_lo = 1e9, pl_hi = 0.0;
    for (const auto& p : curve.points) {
      if (p.a <= ab * (1 + 1e-12)) {
        double r = p.f / (p.a * curve.sigma_total);
        neu_lo = std::min(neu_lo, r);
        neu_hi = std::max(neu_hi, r);
      }
      if (p.a >= ab * (1 - 1e-12)) {
        double r = p.f / curve.f_infinity;
        pl_lo = std::min(pl_lo, r);
        pl_hi = std::max(pl_hi, r);
      }
    }
    bool c_neu = neu_lo >= 1.0 / 20.0 && neu_hi <= 20.0;
    bool c_pl = pl_lo >= 1.0 / 20.0 && pl_hi <= 1.0;
    PhaseReport ph = phase_transition_report(curve);
    bool c_slope = std::fabs(ph.dahlberg_slope + 1.0) <= 0.25;
    bool pass = c_mono && c_neu && c_pl && c_slope;
    record(5, "prefractal transition", pass, now_ms() - t0,
           fmt("increasing%s, F/(a sigma) in [%.3f, %.3f]%s, F/F(inf) in "
               "[%.3f, %.3f]%s, gap slope %.3f%s",
               c_mono ? "" : " FAIL", neu_lo, neu_hi, c_neu ? "" : " (FAIL)",
               pl_lo, pl_hi, c_pl ? "" : " (FAIL)", ph.dahlberg_slope,
               c_slope ? "" : " (FAIL)"));
  }

  // ---- 2: flux certificates over every Green solve made here ------------
  {
    double worst = 0.0;
    for (const auto& c : certs) worst = std::max(worst, std::fabs(c.second - 1.0));
    record(2, "flux normalization", worst <= 1e-8, 0.0,
           fmt("worst |a trace(G) - 1| = %.3g over %zu green solves", worst,
               certs.size()));
  }

  // ---- 6: entropy relation on the k=3 prefractal -------------------------
  t0 = now_ms();
  {
    double ell3 = side / std::pow(3.0, 3);
    GridDomain pre3 = build_prefractal_domain(side, 3, ell3 / 4.0, 3);
    BoundaryMeasure spre3 = build_sigma(pre3);
    double lo = std::pow(pre3.diam, pre3.dim - 2) / spre3.total;
    double hi = 1.0 / (4.0 * ell3);
    std::vector<double> a_grid = log_grid(lo * 1.3, hi * 0.45, 5);
    EntropyReport er = entropy_comparison(pre3, spre3, a_grid, 16, 7);
    FILE* f = std::fopen((g_out + "/entropy_k3.csv").c_str(), "w");
    std::fprintf(f, "a,r_a,f_gap,entropy,ratio,homog_fraction\n");
    for (const auto& r : er.rows)
      std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.a, r.r_a,
                   r.f_gap, r.entropy, r.ratio, r.homog_fraction);
    std::fclose(f);
    bool pass = !er.empty_range && er.rows.size() >= 5 && er.band <= 100.0;
    record(6, "entropy relation", pass, now_ms() - t0,
           fmt("%zu rows over a in [%.3g, %.3g], ratio band %.2fx (tol 100x), "
               "%d cells",
               er.rows.size(), a_grid.front(), a_grid.back(), er.band,
               pre3.cell_count()));
  }

  // ---- 7: harmonic measure suite -----------------------------------------
  t0 = now_ms();
  {
    double worst_mass = 0.0;
    std::vector<Point> poles{{0, 0, 0}, {2, 0, 0}, {-1.3, 0.7, 2.1}};
    for (const auto& p : poles) {
      worst_mass = std::max(
          worst_mass,
          std::fabs(robin_harmonic_measure(ball, sball, 1.0, p).total - 1.0));
      worst_mass = std::max(
          worst_mass,
          std::fabs(dirichlet_harmonic_measure_full(ball, sball, p).total -
                    1.0));
    }
    bool c_mass = worst_mass <= 1e-8;

    double db_lo = 1e300, db_hi = 0.0;
    for (double factor : {1e-2, 1.0, 1e2}) {
      CheckReport rep = doubling_check(pre2, spre2, factor / spre2.total, 12,
                                       50.0, 3);
      write_sample_csv(fmt("doubling_k2_factor_%g.csv", factor), rep.rows);
      db_lo = std::min(db_lo, rep.worst);
      db_hi = std::max(db_hi, rep.worst);
    }
    bool c_db = db_hi / db_lo <= 2.0;

    CheckReport bb = bourgain_check(ball, sball, 1.0, 32, 50.0, 5);
    CheckReport bp = bourgain_check(pre2, spre2, 1.0, 32, 50.0, 5);
    CheckReport gb = greenhm_equiv_check(ball, sball, 1.0, 24, 50.0, 4.0, 6);
    CheckReport gp = greenhm_equiv_check(pre2, spre2, 1.0, 24, 50.0, 4.0, 6);
    write_sample_csv("bourgain_ball.csv", bb.rows);
    write_sample_csv("bourgain_k2.csv", bp.rows);
    write_sample_csv("greenhm_ball.csv", gb.rows);
    write_sample_csv("greenhm_k2.csv", gp.rows);
    double frac = std::min(std::min(bb.pass_fraction, bp.pass_fraction),
                           std::min(gb.pass_fraction, gp.pass_fraction));
    bool c_frac = frac >= 0.95;

    bool pass = c_mass && c_db && c_frac;
    record(7, "harmonic measure suite", pass, now_ms() - t0,
           fmt("worst |mass-1| %.3g%s, doubling spread %.3fx over "
               "{1e-2,1,1e2}/sigma%s, min pass fraction %.3f%s",
               worst_mass, c_mass ? "" : " (FAIL)", db_hi / db_lo,
               c_db ? "" : " (FAIL)", frac, c_frac ? "" : " (FAIL)"));
  }

  // ---- 8: derivative consistency -----------------------------------------
  t0 = now_ms();
  {
    FluxDerivative d1 = flux_derivative(ball, sball, 1.0);
    double eps = 0.01;
    double f_hi = solve_lung(ball, sball, 1.0 + eps).flux;
    double f_lo = solve_lung(ball, sball, 1.0 - eps).flux;
    double cdiff = (f_hi - f_lo) / (2.0 * eps);
    double err = std::fabs(d1.value - cdiff) / cdiff;
    bool c_cd = err <= 0.02;

    int neg = 0;
    double min_fp = 1e300;
    for (double a : log_grid(1e-3, 1e3, 17)) {
      double fp = flux_derivative(ball, sball, a).value;
      min_fp = std::min(min_fp, fp);
      if (fp < 0.0) ++neg;
    }
    bool c_pos = neg == 0;
    record(8, "derivative consistency", c_cd && c_pos, now_ms() - t0,
           fmt("F'(1) = %.6f vs central diff %.6f (rel err %.4f%s); min F' "
               "over grid %.3g%s",
               d1.value, cdiff, err, c_cd ? "" : " FAIL", min_fp,
               c_pos ? "" : " (FAIL)"));
  }

  // ---- 9: determinism through the command runner --------------------------
  t0 = now_ms();
  {
    std::string cfg_path = g_out + "/det_config.json";
    FILE* f = std::fopen(cfg_path.c_str(), "w");
    std::fprintf(f,
                 "{\n"
                 "  \"schema\": 1,\n"
                 "  \"domain\": {\"kind\": \"ball\", \"radius\": 4.0, "
                 "\"h\": 0.25, \"dim\": 3},\n"
                 "  \"seed\": 11,\n"
                 "  \"samples\": 6,\n"
                 "  \"constants\": {\"regime\": 40.0},\n"
                 "  \"a_grid\": {\"lo\": 1e-3, \"hi\": 10.0, \"count\": 7},\n"
                 "  \"flux\": {\"require_span\": false, \"phase\": false}\n"
                 "}\n");
    std::fclose(f);
    RunnerOverrides ov;
    ov.jobs = 1;
    ov.out = g_out + "/det_a";
    int e1 = run_command("flux", cfg_path, ov);
    int e2 = run_command("green-checks", cfg_path, ov);
    ov.out = g_out + "/det_b";
    int e3 = run_command("flux", cfg_path, ov);
    int e4 = run_command("green-checks", cfg_path, ov);
    bool ran = e1 == 0 && e2 == 0 && e3 == 0 && e4 == 0;
    bool same_flux = files_identical(g_out + "/det_a/flux_curve.csv",
                                     g_out + "/det_b/flux_curve.csv");
    bool same_green =
        files_identical(g_out + "/det_a/green_regime_pairs.csv",
                        g_out + "/det_b/green_regime_pairs.csv");
    record(9, "determinism", ran && same_flux && same_green, now_ms() - t0,
           fmt("exit codes %d/%d/%d/%d, flux csv %s, regime csv %s", e1, e2,
               e3, e4, same_flux ? "identical" : "DIFFER",
               same_green ? "identical" : "DIFFER"));
  }

  std::printf("acceptance: %d/9 criteria passed\n", 9 - g_failed);
  return g_failed;
}
