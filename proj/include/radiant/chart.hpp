#ifndef RADIANT_CHART_HPP
#define RADIANT_CHART_HPP

/* Bondi charts u = u(t,r) and the associated weights.
 *
 * Every built-in chart has the form
 *     u(t,x) = t - r - B(t, r/t) W(r)
 * where W(r) = rstar(r) - r is a radial shift vanishing for small r and B is
 * a smooth switch that is identically zero for small t, for r < 0.55 t and
 * for r > 1.95 t, and identically one late in the wave zone.  This keeps
 * u = t - r exactly on {t < 1}, {r < t/2} and {r > 2t} while putting the
 * transition bands outside the wave zone {2t/3 < r < 3t/2}, so late-time
 * wave-zone measurements see the pure shifted chart. */

#include <cmath>
#include <memory>
#include <stdexcept>

#include "jets.hpp"
#include "linalg.hpp"
#include "numerics.hpp"

namespace rad {

/* ----- weights ----- */

struct WeightConfig {
  double C_tau = 10.0;
};

template <class S>
S tau_minus(const S& u) {
  return jap(u);
}
template <class S>
S tau_plus(const S& u, const S& r, double C) {
  return u + r * 2.0 + C;
}
template <class S>
S tau_zero(const S& u, const S& r, double C) {
  return tau_minus(u) / tau_plus(u, r, C);
}
template <class S>
S tau_of(const S& u, const S& r, double C) {
  return tau_plus(u, r, C) / jap(r);
}

/* ----- radial function with jet orders behind a virtual interface ----- */

struct RadialFn {
  virtual ~RadialFn() = default;
  virtual double f0(double r) const = 0;
  virtual J1 f1(const J1& r) const = 0;
  virtual J2 f2(const J2& r) const = 0;
  virtual J3 f3(const J3& r) const = 0;
};

template <class Impl>
struct RadialFnT : RadialFn {
  double f0(double r) const override {
    return static_cast<const Impl*>(this)->template eval<double>(r);
  }
  J1 f1(const J1& r) const override {
    return static_cast<const Impl*>(this)->template eval<J1>(r);
  }
  J2 f2(const J2& r) const override {
    return static_cast<const Impl*>(this)->template eval<J2>(r);
  }
  J3 f3(const J3& r) const override {
    return static_cast<const Impl*>(this)->template eval<J3>(r);
  }
};

template <class S>
S radial_eval(const RadialFn& f, const S& r) {
  constexpr int ord = jet_order<S>::value;
  if constexpr (ord == 0)
    return f.f0(r);
  else if constexpr (ord == 1)
    return f.f1(r);
  else if constexpr (ord == 2)
    return f.f2(r);
  else
    return f.f3(r);
}

/* ----- the chart ----- */

class Chart {
 public:
  double C_tau = 10.0;
  /* switch parameters; see header comment */
  double t_on = 32.0, t_full = 512.0;
  double rho_lo0 = 0.55, rho_lo1 = 0.65;
  double rho_hi0 = 1.52, rho_hi1 = 1.95;
  std::shared_ptr<RadialFn> shift; /* W(r) = rstar(r) - r; null for W = 0 */

  bool trivial() const { return shift == nullptr; }

  template <class S>
  S switch_t(const S& t) const {
    double tv = vof(t);
    if (tv <= t_on) return make_const<S>(0.0);
    if (tv >= t_full) return make_const<S>(1.0);
    using std::log;
    S l = log(t) * (1.0 / std::log(2.0));
    double l0 = std::log2(t_on), l1 = std::log2(t_full);
    return sstep7((l - l0) * (1.0 / (l1 - l0)));
  }

  template <class S>
  S switch_rho(const S& rho) const {
    return rise(rho, rho_lo0, rho_lo1) * cut_above(rho, rho_hi0, rho_hi1);
  }

  template <class S>
  S u_of(const S& t, const S& r) const {
    S base = t - r;
    if (!shift) return base;
    double tv = vof(t), rv = vof(r);
    if (tv <= t_on) return base;
    if (rv <= rho_lo0 * tv || rv >= rho_hi1 * tv) return base;
    S B = switch_t(t) * switch_rho(r / t);
    return base - B * radial_eval(*shift, r);
  }

  template <class S>
  S u_tx(const S& t, const V3<S>& x) const {
    using std::sqrt;
    S r = sqrt(dot3(x, x));
    return u_of(t, r);
  }

  /* invert u(t,r) = u0 for t at fixed r (monotone in t since u_t > 0) */
  double t_from_u(double u0, double r) const {
    double t = u0 + r;
    for (int i = 0; i < 100; ++i) {
      J1 tj = make_coord<J1>(t, 0);
      J1 uj = u_of(tj, make_const<J1>(r));
      double f = uj.v - u0, df = uj.d[0];
      double step = f / df;
      t -= step;
      if (std::fabs(step) < 1e-13 * (1.0 + std::fabs(t))) break;
    }
    return t;
  }
};

/* ----- converting (t,x)-jets to Bondi partials -----
 *
 * With A = 1/u_t and w_i = u_i/u_t:
 *   D_u f      = A f_t
 *   Dt_i f     = f_i - w_i f_t                     (x-partial at fixed u)
 *   D_u^2 f    = A^2 f_tt + A A_t f_t,  A_t = -u_tt/u_t^2
 *   D_u Dt_i f = A (f_ti - w_{i,t} f_t - w_i f_tt)
 *   Dt_iDt_j f = f_ij - w_j f_ti - w_i f_tj + w_i w_j f_tt
 *                - (w_{j,i} - w_i w_{j,t}) f_t
 * where w_{i,t} = (u_{it} u_t - u_i u_tt)/u_t^2 and
 *       w_{j,i} = (u_{ji} u_t - u_j u_{ti})/u_t^2. */

struct Bondi2 {
  double f = 0;
  double fu = 0;
  V3<double> fx{};       /* Dt_i f */
  double fuu = 0;
  V3<double> fux{};      /* D_u Dt_i f */
  M3<double> fxx{};      /* Dt_i Dt_j f */
};

inline Bondi2 bondi2_of(const J2& F, const J2& U) {
  Bondi2 b;
  double ut = U.d[0].v;
  double utt = U.d[0].d[0];
  double A = 1.0 / ut;
  double At = -utt / (ut * ut);
  b.f = F.v.v;
  double ft = F.d[0].v;
  double ftt = F.d[0].d[0];
  b.fu = A * ft;
  b.fuu = A * A * ftt + A * At * ft;
  V3<double> w, wt;
  for (int i = 0; i < 3; ++i) {
    double ui = U.d[i + 1].v;
    double uit = U.d[i + 1].d[0];
    w[i] = ui / ut;
    wt[i] = (uit * ut - ui * utt) / (ut * ut);
  }
  for (int i = 0; i < 3; ++i) {
    double fi = F.d[i + 1].v;
    double fti = F.d[0].d[i + 1];
    b.fx[i] = fi - w[i] * ft;
    b.fux[i] = A * (fti - wt[i] * ft - w[i] * ftt);
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double fij = F.d[i + 1].d[j + 1];
      double fti = F.d[0].d[i + 1];
      double ftj = F.d[0].d[j + 1];
      double uji = U.d[j + 1].d[i + 1];
      double uj = U.d[j + 1].v;
      double uti = U.d[0].d[i + 1];
      double wji = (uji * ut - uj * uti) / (ut * ut);
      b.fxx[i][j] = fij - w[j] * fti - w[i] * ftj + w[i] * w[j] * ftt -
                    (wji - w[i] * wt[j]) * ft;
    }
  }
  return b;
}

}  // namespace rad

#endif
