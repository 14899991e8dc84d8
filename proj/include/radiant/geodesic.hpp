#ifndef RADIANT_GEODESIC_HPP
#define RADIANT_GEODESIC_HPP

/* Null geodesic flow in Hamiltonian form,
 *
 *   dx^a/ds  =  2 g^{ab} xi_b,        dxi_a/ds = -(d_a g^{mn}) xi_m xi_n,
 *
 * with the invariant p = g^{ab} xi_a xi_b conserved along exact trajectories.
 * Rays are normalized so dt/ds = 1 at launch; in flat space s then equals
 * coordinate time exactly.  The integrator is a Dormand-Prince 5(4) pair with
 * a fixed baseline step tied to the tolerance and halving on rejection, so a
 * run is bit-reproducible.  Exit times through a coordinate sphere are
 * resolved by bisecting a single partial step. */

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "metric.hpp"

namespace rad {

struct GeodesicOptions {
  double tol = 1e-10;   /* per-step gate on the embedded error estimate */
  double s_max = 1e3;
  double h_cap = 0.25;
  double h_coef = 5e4;  /* baseline step = min(h_cap, h_coef * tol^{3/5}) */
  long max_steps = 4000000;
};

struct NullRay {
  V4<double> x{};
  V4<double> xi{};
};

struct RayResult {
  bool exited = false;
  double exit_s = 0.0;
  double exit_t = 0.0; /* coordinate time elapsed at the crossing */
  double p0 = 0.0;
  double p_drift = 0.0;
  double lz_drift = 0.0; /* drift of x xi_y - y xi_x, exact for rotations about z */
  double xi_ratio_max = 1.0, xi_ratio_min = 1.0;
  long steps = 0, rejects = 0;
  V4<double> x_end{}, xi_end{};
};

inline double null_invariant(const MetricModel& m, const V4<double>& x,
                             const V4<double>& xi) {
  M4<double> g = m.inv0(x[0], {x[1], x[2], x[3]});
  return quad_form(g, xi, xi);
}

/* future-directed null covector at (t0, pos) moving along the unit spatial
 * direction dir, scaled so dt/ds = 1 */
inline NullRay null_ray(const MetricModel& m, double t0, const V3<double>& pos,
                        const V3<double>& dir) {
  double n = std::sqrt(dot3(dir, dir));
  if (n <= 0.0) throw std::invalid_argument("null_ray: zero direction");
  V3<double> v{dir[0] / n, dir[1] / n, dir[2] / n};
  M4<double> g = m.inv0(t0, pos);
  double A = g[0][0];
  if (!(A < 0.0)) throw std::runtime_error("null_ray: time direction not timelike");
  double B = 0.0, Cq = 0.0;
  for (int i = 0; i < 3; ++i) {
    B += g[0][i + 1] * v[i];
    for (int j = 0; j < 3; ++j) Cq += g[i + 1][j + 1] * v[i] * v[j];
  }
  double D = std::sqrt(B * B - A * Cq);
  double xt = (-B + D) / A; /* root with 2(A xt + B) = 2D > 0, future-directed */
  NullRay r;
  r.x = {t0, pos[0], pos[1], pos[2]};
  r.xi = {xt / (2.0 * D), v[0] / (2.0 * D), v[1] / (2.0 * D), v[2] / (2.0 * D)};
  return r;
}

namespace detail {

using S8 = std::array<double, 8>;

inline S8 geo_rhs(const MetricModel& m, const S8& y) {
  J1 t = make_coord<J1>(y[0], 0);
  V3<J1> x{make_coord<J1>(y[1], 1), make_coord<J1>(y[2], 2),
           make_coord<J1>(y[3], 3)};
  M4<J1> g = inv_metric(m, t, x);
  S8 f{};
  for (int a = 0; a < 4; ++a) {
    double s = 0.0;
    for (int b = 0; b < 4; ++b) s += g[a][b].v * y[4 + b];
    f[a] = 2.0 * s;
  }
  for (int c = 0; c < 4; ++c) {
    double s = 0.0;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) s += g[a][b].d[c] * y[4 + a] * y[4 + b];
    f[4 + c] = -s;
  }
  return f;
}

/* Dormand-Prince 5(4): returns the fifth order proposal; err is the scaled
 * magnitude of the embedded difference */
inline S8 dp45_step(const MetricModel& m, const S8& y, double h, double& err) {
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  /* fifth minus fourth order weights */
  static constexpr double d1 = 71.0 / 57600, d3 = -71.0 / 16695, d4 = 71.0 / 1920,
                          d5 = -17253.0 / 339200, d6 = 22.0 / 525, d7 = -1.0 / 40;

  auto at = [&](const S8& base, std::initializer_list<std::pair<double, const S8*>> terms) {
    S8 r = base;
    for (const auto& [c, k] : terms)
      for (int i = 0; i < 8; ++i) r[i] += h * c * (*k)[i];
    return r;
  };

  S8 k1 = geo_rhs(m, y);
  S8 k2 = geo_rhs(m, at(y, {{a21, &k1}}));
  S8 k3 = geo_rhs(m, at(y, {{a31, &k1}, {a32, &k2}}));
  S8 k4 = geo_rhs(m, at(y, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
  S8 k5 = geo_rhs(m, at(y, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
  S8 k6 = geo_rhs(
      m, at(y, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
  S8 y5 = at(y, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
  S8 k7 = geo_rhs(m, y5);

  err = 0.0;
  for (int i = 0; i < 8; ++i) {
    double e = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                    d6 * k6[i] + d7 * k7[i]);
    double sc = 1.0 + std::fabs(y5[i]);
    err = std::max(err, std::fabs(e) / sc);
  }
  return y5;
}

inline double spatial_r(const S8& y) {
  return std::sqrt(y[1] * y[1] + y[2] * y[2] + y[3] * y[3]);
}

inline double xi_norm(const S8& y) {
  return std::sqrt(y[4] * y[4] + y[5] * y[5] + y[6] * y[6] + y[7] * y[7]);
}

}  // namespace detail

/* Integrate until the spatial radius first exceeds r_exit, or until s_max.
 * The crossing is refined by bisection over a partial final step. */
inline RayResult trace_until_exit(const MetricModel& m, const NullRay& ray,
                                  double r_exit,
                                  const GeodesicOptions& opt = {}) {
  using detail::S8;
  RayResult R;
  S8 y{ray.x[0],  ray.x[1],  ray.x[2],  ray.x[3],
       ray.xi[0], ray.xi[1], ray.xi[2], ray.xi[3]};
  R.p0 = null_invariant(m, ray.x, ray.xi);
  const double xin0 = detail::xi_norm(y);
  const double lz0 = y[1] * y[6] - y[2] * y[5];
  const double h0 = std::min(opt.h_cap, opt.h_coef * std::pow(opt.tol, 0.6));
  double h = h0;
  double s = 0.0;

  auto settle = [&](const S8& z) {
    R.x_end = {z[0], z[1], z[2], z[3]};
    R.xi_end = {z[4], z[5], z[6], z[7]};
  };
  auto observe = [&](const S8& z) {
    double p = null_invariant(m, {z[0], z[1], z[2], z[3]},
                              {z[4], z[5], z[6], z[7]});
    R.p_drift = std::max(R.p_drift, std::fabs(p - R.p0));
    R.lz_drift = std::max(R.lz_drift, std::fabs(z[1] * z[6] - z[2] * z[5] - lz0));
    double q = detail::xi_norm(z) / xin0;
    R.xi_ratio_max = std::max(R.xi_ratio_max, q);
    R.xi_ratio_min = std::min(R.xi_ratio_min, q);
  };

  if (detail::spatial_r(y) >= r_exit) {
    R.exited = true;
    settle(y);
    return R;
  }

  while (s < opt.s_max && R.steps + R.rejects < opt.max_steps) {
    h = std::min(h, opt.s_max - s);
    double err = 0.0;
    S8 y5 = detail::dp45_step(m, y, h, err);
    if (!(err <= opt.tol) && h > 1e-6 * h0) {
      h *= 0.5;
      ++R.rejects;
      continue;
    }
    ++R.steps;
    if (detail::spatial_r(y5) >= r_exit) {
      double lo = 0.0, hi = h;
      S8 yx = y5;
      for (int it = 0; it < 90 && hi - lo > 0.0; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        double e2 = 0.0;
        S8 ym = detail::dp45_step(m, y, mid, e2);
        if (detail::spatial_r(ym) >= r_exit) {
          hi = mid;
          yx = ym;
        } else {
          lo = mid;
        }
      }
      R.exited = true;
      R.exit_s = s + hi;
      R.exit_t = yx[0] - ray.x[0];
      observe(yx);
      settle(yx);
      return R;
    }
    y = y5;
    s += h;
    observe(y);
    if (err < opt.tol / 64.0) h = std::min(2.0 * h, h0);
  }
  settle(y);
  return R;
}

struct NontrappingOptions {
  int npos = 13;  /* Fibonacci points per shell */
  int ndir = 6;   /* Fibonacci directions per point; inward and outward added */
  double t0 = 0.0;
  GeodesicOptions geo;
};

struct NontrappingResult {
  double C = 0.0; /* worst exit time over the ensemble */
  double A = 1.0; /* worst frequency ratio max(|xi|/|xi_0|, |xi_0|/|xi|) */
  bool all_exited = true;
  double worst_drift = 0.0;
  int rays = 0;
  RayResult worst; /* the ray achieving C */
};

/* deterministic launch set inside the ball of radius R0: one bundle at the
 * center, three shells with inward and outward rays added per point */
inline std::vector<NullRay> launch_set(const MetricModel& m, double R0, double t0,
                                       int npos, int ndir) {
  std::vector<NullRay> rays;
  auto dirs = [](int n) {
    std::vector<V3<double>> d(n);
    const double ga = M_PI * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
      double z = 1.0 - 2.0 * (i + 0.5) / n;
      double rho = std::sqrt(1.0 - z * z);
      d[i] = {rho * std::cos(ga * i), rho * std::sin(ga * i), z};
    }
    return d;
  };
  auto dd = dirs(ndir);
  for (const auto& v : dd) rays.push_back(null_ray(m, t0, {0, 0, 0}, v));
  const double fr[3] = {0.35, 0.7, 1.0 - 1e-9};
  auto pp = dirs(npos);
  for (double f : fr)
    for (const auto& p : pp) {
      V3<double> pos{f * R0 * p[0], f * R0 * p[1], f * R0 * p[2]};
      for (const auto& v : dd) rays.push_back(null_ray(m, t0, pos, v));
      rays.push_back(null_ray(m, t0, pos, {-p[0], -p[1], -p[2]}));
      rays.push_back(null_ray(m, t0, pos, p));
    }
  return rays;
}

inline NontrappingResult nontrapping_constant(const MetricModel& m, double R0,
                                              const NontrappingOptions& opt = {}) {
  NontrappingResult N;
  auto rays = launch_set(m, R0, opt.t0, opt.npos, opt.ndir);
  N.rays = static_cast<int>(rays.size());
  for (const auto& ray : rays) {
    RayResult r = trace_until_exit(m, ray, R0, opt.geo);
    if (!r.exited) N.all_exited = false;
    if (r.exited && r.exit_t > N.C) {
      N.C = r.exit_t;
      N.worst = r;
    }
    N.A = std::max({N.A, r.xi_ratio_max, 1.0 / r.xi_ratio_min});
    N.worst_drift = std::max(N.worst_drift, r.p_drift);
  }
  return N;
}

struct MarginResult {
  double value = 1e300;
  double t = 0.0;
  V3<double> x{};
};

/* min of -g_00 (lower index) over a coordinate box: positive iff d_t stays
 * timelike there */
inline MarginResult timelike_margin(const MetricModel& m, double t0, double t1,
                                    double r_max, int nt = 12, int nr = 16,
                                    int ndir = 6) {
  MarginResult res;
  const double ga = M_PI * (3.0 - std::sqrt(5.0));
  for (int it = 0; it < nt; ++it) {
    double t = nt == 1 ? t0 : t0 + (t1 - t0) * it / (nt - 1.0);
    for (int ir = 0; ir < nr; ++ir) {
      double r = r_max * ir / (nr - 1.0);
      for (int id = 0; id < ndir; ++id) {
        double z = 1.0 - 2.0 * (id + 0.5) / ndir;
        double rho = std::sqrt(1.0 - z * z);
        V3<double> x{r * rho * std::cos(ga * id), r * rho * std::sin(ga * id),
                     r * z};
        M4<double> g = m.inv0(t, x);
        M4<double> gdn = inv4(g);
        double v = -gdn[0][0];
        if (v < res.value) {
          res.value = v;
          res.t = t;
          res.x = x;
        }
        if (r == 0.0) break; /* all directions coincide at the origin */
      }
    }
  }
  return res;
}

}  // namespace rad

#endif
