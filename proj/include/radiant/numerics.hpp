#ifndef RADIANT_NUMERICS_HPP
#define RADIANT_NUMERICS_HPP

/* Shared numerical utilities: smooth cutoffs, quadrature, tridiagonal solve,
 * least squares, finite-difference oracles, RNG seeding, hashing. */

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "jets.hpp"
#include "linalg.hpp"

namespace rad {

/* ----- smooth steps -----
 * sstep7: C^3 monotone step 0->1 on [0,1]; safe under third-order jets.
 * sstep5: the classical quintic (C^2), kept for radial multiplier cutoffs. */

template <class S>
S sstep7(const S& x) {
  double xv = vof(x);
  if (xv <= 0.0) return make_const<S>(0.0);
  if (xv >= 1.0) return make_const<S>(1.0);
  S x2 = x * x;
  S x4 = x2 * x2;
  return x4 * (35.0 + x * (-84.0 + x * (70.0 - 20.0 * x)));
}

template <class S>
S sstep5(const S& x) {
  double xv = vof(x);
  if (xv <= 0.0) return make_const<S>(0.0);
  if (xv >= 1.0) return make_const<S>(1.0);
  S x2 = x * x;
  S x3 = x2 * x;
  return x3 * (10.0 + x * (-15.0 + 6.0 * x));
}

/* 1 for x <= x0, 0 for x >= x1 */
template <class S>
S cut_above(const S& x, double x0, double x1) {
  return make_const<S>(1.0) - sstep7((x - x0) * (1.0 / (x1 - x0)));
}

/* 0 for x <= x0, 1 for x >= x1 */
template <class S>
S rise(const S& x, double x0, double x1) {
  return sstep7((x - x0) * (1.0 / (x1 - x0)));
}

/* ----- tridiagonal (Thomas) solve -----
 * a: sub, b: diag, c: super, rhs in r, solution written to x.
 * Returns the index of the first near-zero pivot, or -1 on success. */
inline long tridiag_solve(const std::vector<double>& a, const std::vector<double>& b,
                          const std::vector<double>& c, const std::vector<double>& r,
                          std::vector<double>& x, double pivot_tol = 1e-14) {
  const std::size_t n = b.size();
  std::vector<double> cp(n), dp(n);
  double beta = b[0];
  if (std::fabs(beta) < pivot_tol) return 0;
  cp[0] = c[0] / beta;
  dp[0] = r[0] / beta;
  for (std::size_t i = 1; i < n; ++i) {
    beta = b[i] - a[i] * cp[i - 1];
    if (std::fabs(beta) < pivot_tol) return static_cast<long>(i);
    cp[i] = c[i] / beta;
    dp[i] = (r[i] - a[i] * dp[i - 1]) / beta;
  }
  x.assign(n, 0.0);
  x[n - 1] = dp[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = dp[i] - cp[i] * x[i + 1];
  return -1;
}

/* ----- Gauss-Legendre nodes on [-1,1], computed once per order ----- */
struct GaussLegendre {
  std::vector<double> x, w;
  explicit GaussLegendre(int n) : x(n), w(n) {
    const double eps = 1e-15;
    int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
      double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      double pp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p1 = 1.0, p2 = 0.0;
        for (int j = 0; j < n; ++j) {
          double p3 = p2;
          p2 = p1;
          p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
        }
        pp = n * (z * p1 - p2) / (z * z - 1.0);
        double z1 = z;
        z = z1 - p1 / pp;
        if (std::fabs(z - z1) < eps) break;
      }
      x[i] = -z;
      x[n - 1 - i] = z;
      w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
      w[n - 1 - i] = w[i];
    }
  }
};

inline const GaussLegendre& gl32() {
  static const GaussLegendre g(32);
  return g;
}
inline const GaussLegendre& gl16() {
  static const GaussLegendre g(16);
  return g;
}
inline const GaussLegendre& gl8() {
  static const GaussLegendre g(8);
  return g;
}

/* integrate f over [a,b] with an n-point Gauss rule; f generic (jets allowed
 * through the scalar return type of the callable) */
template <class F>
auto gl_integrate(F&& f, double a, double b, const GaussLegendre& g)
    -> decltype(f(0.0)) {
  using S = decltype(f(0.0));
  S acc = make_const<S>(0.0);
  double h = 0.5 * (b - a), m = 0.5 * (b + a);
  for (std::size_t i = 0; i < g.x.size(); ++i)
    acc = acc + f(m + h * g.x[i]) * (g.w[i] * h);
  return acc;
}

/* composite trapezoid on equispaced samples */
inline double trapezoid(const std::vector<double>& y, double h) {
  if (y.size() < 2) return 0.0;
  double s = 0.5 * (y.front() + y.back());
  for (std::size_t i = 1; i + 1 < y.size(); ++i) s += y[i];
  return s * h;
}

template <class F>
double trapezoid_fn(F&& f, double a, double b, int n) {
  double h = (b - a) / n;
  double s = 0.5 * (f(a) + f(b));
  for (int i = 1; i < n; ++i) s += f(a + i * h);
  return s * h;
}

/* ----- finite-difference oracles (tests only lean on these) ----- */
template <class F>
double fd_deriv(F&& f, double x, double h) {
  /* 4th order central first derivative */
  return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h);
}

template <class F>
double fd_deriv2(F&& f, double x, double h) {
  return (-f(x + 2 * h) + 16 * f(x + h) - 30 * f(x) + 16 * f(x - h) - f(x - 2 * h)) /
         (12 * h * h);
}

/* Richardson slope: observed convergence order from three residuals at h, h/2, h/4 */
inline double observed_order(double e1, double e2, double e3) {
  double r1 = std::fabs(e1 / e2), r2 = std::fabs(e2 / e3);
  return 0.5 * (std::log2(r1) + std::log2(r2));
}

/* ----- least squares -----
 * rows of X are regressors (first column typically 1.0), solves min |X b - y|_2. */
inline bool lsq_fit(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                    std::vector<double>& beta) {
  const std::size_t n = X.size();
  if (n == 0) return false;
  const std::size_t p = X[0].size();
  std::vector<std::vector<double>> ata(p, std::vector<double>(p, 0.0));
  std::vector<double> aty(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < p; ++a) {
      aty[a] += X[i][a] * y[i];
      for (std::size_t b = 0; b < p; ++b) ata[a][b] += X[i][a] * X[i][b];
    }
  }
  return solve_dense(ata, aty, beta);
}

/* simple slope of y vs x */
inline double lsq_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<std::vector<double>> X;
  for (double xi : x) X.push_back({1.0, xi});
  std::vector<double> beta;
  if (!lsq_fit(X, y, beta)) return std::nan("");
  return beta[1];
}

/* ----- RNG seeding -----
 * splitmix64 turns (base seed, stream index) into decorrelated engine seeds so
 * ensemble members are independent of worker count and iteration order. */
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::mt19937_64 seeded_engine(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t s = base ^ (0x632be59bd9b4e019ULL * (stream + 1));
  std::uint64_t a = splitmix64(s), b = splitmix64(s);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

inline V3<double> sample_unit_sphere(std::mt19937_64& eng) {
  std::normal_distribution<double> n(0.0, 1.0);
  double x = n(eng), y = n(eng), z = n(eng);
  double r = std::sqrt(x * x + y * y + z * z);
  if (r < 1e-12) return {1.0, 0.0, 0.0};
  return {x / r, y / r, z / r};
}

inline V3<double> sample_ball(std::mt19937_64& eng, double radius) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  V3<double> dir = sample_unit_sphere(eng);
  double r = radius * std::cbrt(u(eng));
  return {r * dir[0], r * dir[1], r * dir[2]};
}

/* ----- FNV-1a 64-bit ----- */
inline std::uint64_t fnv1a(const void* data, std::size_t n,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}
inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  return fnv1a(s.data(), s.size(), h);
}

/* ----- grids ----- */
inline std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  return v;
}
inline std::vector<double> logspace(double a, double b, int n) {
  std::vector<double> v(n);
  double la = std::log(a), lb = std::log(b);
  for (int i = 0; i < n; ++i) v[i] = std::exp(la + (lb - la) * i / (n - 1));
  return v;
}

/* Neumaier compensated sum for long accumulations */
struct KahanSum {
  double s = 0.0, c = 0.0;
  void add(double x) {
    double t = s + x;
    if (std::fabs(s) >= std::fabs(x))
      c += (s - t) + x;
    else
      c += (x - t) + s;
    s = t;
  }
  double value() const { return s + c; }
};

/* Scalar Newton iteration; df must stay away from zero near the root. */
template <class F, class DF>
double newton_solve(F&& f, DF&& df, double x0, double tol = 1e-14, int maxit = 80) {
  double x = x0;
  for (int i = 0; i < maxit; ++i) {
    double fx = f(x);
    double d = df(x);
    double step = fx / d;
    x -= step;
    if (std::fabs(step) < tol * (1.0 + std::fabs(x))) break;
  }
  return x;
}

}  // namespace rad

#endif
