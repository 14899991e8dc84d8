#ifndef RADIANT_BONDI_HPP
#define RADIANT_BONDI_HPP

/* Bondi components by contraction with the chart gradient:
 *   g^{uu} = u_a u_b g^{ab},  g^{ui} = u_b g^{ib},  g^{ij} unchanged,
 * plus the inverse reconstruction used for round-trip validation. */

#include <stdexcept>

#include "metric.hpp"

namespace rad {

template <class S>
struct GradU {
  S u;
  S ut;
  V3<S> ux;
};

/* value and full (t,x)-gradient of u at jet order S via one extra nesting */
template <class S>
GradU<S> grad_u(const Chart& ch, const S& t, const V3<S>& x) {
  using JS = Jet<S>;
  JS tj;
  tj.v = t;
  tj.d[0] = make_const<S>(1.0);
  V3<JS> xj;
  for (int i = 0; i < 3; ++i) {
    xj[i].v = x[i];
    xj[i].d[i + 1] = make_const<S>(1.0);
  }
  JS uj = ch.u_tx(tj, xj);
  GradU<S> g;
  g.u = uj.v;
  g.ut = uj.d[0];
  for (int i = 0; i < 3; ++i) g.ux[i] = uj.d[i + 1];
  return g;
}

template <class S>
struct BondiComponents {
  S guu;
  V3<S> gui;
  M3<S> gij;
  GradU<S> du;
};

template <class S>
BondiComponents<S> to_bondi(const MetricModel& m, const S& t, const V3<S>& x) {
  GradU<S> du = grad_u(m.chart, t, x);
  if (std::fabs(vof(du.ut)) < 1e-6)
    throw std::runtime_error("degenerate chart: |du/dt| < 1e-6");
  M4<S> g = inv_metric(m, t, x);
  BondiComponents<S> b;
  b.du = du;
  V4<S> ua{du.ut, du.ux[0], du.ux[1], du.ux[2]};
  b.guu = quad_form(g, ua, ua);
  for (int i = 0; i < 3; ++i) {
    S s = make_const<S>(0.0);
    for (int a = 0; a < 4; ++a) s = s + g[i + 1][a] * ua[a];
    b.gui[i] = s;
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) b.gij[i][j] = g[i + 1][j + 1];
  return b;
}

/* reconstruct g^{tt}, g^{ti} from the Bondi data; g^{ij} is shared */
template <class S>
M4<S> from_bondi(const BondiComponents<S>& b) {
  M4<S> g = zero4<S>();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) g[i + 1][j + 1] = b.gij[i][j];
  V3<S> gti;
  for (int i = 0; i < 3; ++i) {
    S s = b.gui[i];
    for (int j = 0; j < 3; ++j) s = s - b.du.ux[j] * b.gij[i][j];
    gti[i] = s / b.du.ut;
    g[0][i + 1] = g[i + 1][0] = gti[i];
  }
  S s = b.guu;
  for (int i = 0; i < 3; ++i) {
    s = s - b.du.ut * b.du.ux[i] * gti[i] * 2.0;
    for (int j = 0; j < 3; ++j) s = s - b.du.ux[i] * b.du.ux[j] * b.gij[i][j];
  }
  g[0][0] = s / (b.du.ut * b.du.ut);
  return g;
}

/* omega^i = x^i/r */
template <class S>
V3<S> omega_of(const V3<S>& x) {
  using std::sqrt;
  S r = sqrt(dot3(x, x));
  return {x[0] / r, x[1] / r, x[2] / r};
}

}  // namespace rad

#endif
