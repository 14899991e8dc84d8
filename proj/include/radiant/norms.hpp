#ifndef RADIANT_NORMS_HPP
#define RADIANT_NORMS_HPP

/* Weighted norms over solution slabs.
 *
 * A slab is a mode field phi_l(t, r) sampled on a rectangular (t, r) grid,
 * either lifted from solver snapshots or filled from a closed form. Every
 * norm reduces to radial quadrature against the measure r^2 dr (dt), with
 * the angular content of the mode folded in through L = l(l+1):
 *
 *   |grad phi|^2           -> phi_t^2 + phi_r^2 + L (phi/r)^2
 *   |(dtilde_x phi, ...)|^2 -> (dtilde_r phi)^2 + L (phi/r)^2 + ...
 *
 * and phi / r is continued to r = 0 by its limit. Dyadic ell^p structure
 * is taken over annuli in <r>, blocks in t, and level sets of the chart
 * function u; the sharp style tiles each axis exactly once, the smooth
 * style telescopes the window of numerics.hpp into a partition of unity.
 * Fields carrying weights (the a, b superscripts and the conjugation
 * Omega) are formed on the slab first and then differenced, so every
 * derivative is a centered difference of sampled values. Cone cutoffs
 * r < t/2, t/2 < r < 2t, r > 2t act as sharp disjoint integration
 * regions. Error estimates compare the reported value against a rerun on
 * a slab thinned by a factor of two, which exercises quadrature and
 * differencing together. */

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "radiant/solver.hpp"

namespace rad {

/* ----- dyadic partitions ----- */

enum class Axis { r, t, u };
enum class CutStyle { sharp, smooth };

struct DyadicPartition {
  Axis axis = Axis::r;
  CutStyle style = CutStyle::sharp;
  int i_lo = 0;
  int i_hi = 0;

  /* dyadic coordinate: log2 of <r>, max(t, 1), or <u> */
  static double scale(Axis ax, double s) {
    if (ax == Axis::t) return std::log2(std::max(s, 1.0));
    return std::log2(jap(s));
  }

  double weight(int i, double s) const {
    double x = scale(axis, s);
    if (style == CutStyle::sharp) {
      int bin = std::max(0, static_cast<int>(std::floor(x)));
      return bin == i ? 1.0 : 0.0;
    }
    double hi = cut_above(x, static_cast<double>(i), static_cast<double>(i) + 1.0);
    if (i == 0) return hi;
    double lo = cut_above(x, static_cast<double>(i) - 1.0, static_cast<double>(i));
    return hi - lo;
  }

  static DyadicPartition over(Axis ax, CutStyle st, double hi_val) {
    DyadicPartition p;
    p.axis = ax;
    p.style = st;
    double xhi = scale(ax, hi_val);
    p.i_lo = 0;
    p.i_hi = std::max(0, static_cast<int>(std::floor(xhi))) +
             (st == CutStyle::smooth ? 1 : 0);
    return p;
  }
};

/* ----- field slabs ----- */

struct FieldSlab {
  int l = 0;
  std::string id = "phi";
  std::vector<double> t;
  std::vector<double> r;
  std::vector<std::vector<double>> v; /* [it][ir] */
};

inline FieldSlab slab_from_trace(const SolutionTrace& tr, std::size_t mode) {
  if (mode >= tr.modes.size()) throw std::invalid_argument("mode index out of range");
  const ModeTrace& mt = tr.modes[mode];
  if (mt.snapshots.size() < 3)
    throw std::invalid_argument("trace needs at least three snapshots for a slab");
  FieldSlab f;
  f.l = mt.l;
  double dr = tr.grid.dr();
  int nr = tr.grid.nr;
  f.r.resize(nr);
  for (int i = 0; i < nr; ++i) f.r[i] = i * dr;
  for (const Snapshot& sp : mt.snapshots) {
    f.t.push_back(sp.t);
    std::vector<double> row(nr);
    /* phi = psi / r, continued to the axis by the psi slope */
    row[0] = (4.0 * sp.psi[1] - sp.psi[2]) / (2.0 * dr);
    for (int i = 1; i < nr; ++i) row[i] = sp.psi[i] / f.r[i];
    f.v.push_back(std::move(row));
  }
  return f;
}

inline FieldSlab slab_from_fn(const std::function<double(double, double)>& fn, int l,
                              const std::vector<double>& times,
                              const std::vector<double>& radii,
                              const std::string& id = "phi") {
  FieldSlab f;
  f.l = l;
  f.id = id;
  f.t = times;
  f.r = radii;
  for (double tv : times) {
    std::vector<double> row;
    row.reserve(radii.size());
    for (double rv : radii) row.push_back(fn(tv, rv));
    f.v.push_back(std::move(row));
  }
  return f;
}

/* ----- norm identifiers ----- */

enum class NormKind {
  LE,      /* <r>^{-1/2} grad + <r>^{-3/2} field, ell^inf_r L^2 */
  LEstar,  /* <r>^{1/2} source, ell^1_r L^2 */
  NLE,     /* <r>^{-1/2} field, ell^inf_u ell^inf_r L^2 */
  NLEstar, /* <r>^{1/2} source, ell^1_u ell^1_r L^2 */
  CH_I,    /* null energy, conjugation <r> */
  CH_II,   /* null energy, conjugation tau_- tau_+ */
  Snorm,   /* CH_I + CH_II + sup_t of interior LE^1 */
  Nnorm,   /* split source norm */
  CE,      /* fixed-time conformal energy */
  CE_I,    /* conjugated, Omega = <r> */
  CE_II,   /* conjugated, Omega = tau_- tau_+ */
  L2grad,  /* fixed-time L^2 of grad */
  Hsak,    /* weighted data space, orders s and k */
  N1,      /* higher-order source norm */
  M1       /* higher-order source norm with adapted derivatives */
};

struct NormSpec {
  NormKind kind = NormKind::LE;
  double a = 0.0; /* tau_+ exponent */
  double b = 0.0; /* tau_0 exponent */
  int s = 0;      /* Hsak orders */
  int k = 0;
  double gamma = 0.5; /* enters the higher-order interior tail exponent */
  CutStyle style = CutStyle::sharp;
};

struct NormValue {
  std::string kind;
  double value = 0.0;
  double t0 = 0.0;
  double t1 = 0.0;
  std::string field;
  double err_est = 0.0;
};

enum class GammaField { T, S, O12, O13, O23 };

namespace detail_norms {

inline std::string kind_name(NormKind k) {
  switch (k) {
    case NormKind::LE: return "LE";
    case NormKind::LEstar: return "LE*";
    case NormKind::NLE: return "NLE";
    case NormKind::NLEstar: return "NLE*";
    case NormKind::CH_I: return "CH_I";
    case NormKind::CH_II: return "CH_II";
    case NormKind::Snorm: return "S";
    case NormKind::Nnorm: return "N";
    case NormKind::CE: return "CE";
    case NormKind::CE_I: return "CE_I";
    case NormKind::CE_II: return "CE_II";
    case NormKind::L2grad: return "L2grad";
    case NormKind::Hsak: return "H";
    case NormKind::N1: return "N1";
    case NormKind::M1: return "M1";
  }
  return "?";
}

/* chart data and centered differences over one slab */
struct Tables {
  const FieldSlab* f = nullptr;
  int l = 0;
  int nt = 0, nr = 0;
  std::vector<std::vector<double>> ft, fr, q; /* dphi/dt, dphi/dr, phi/r */
  std::vector<std::vector<double>> u, ut, ur;
};

inline void diff_rows(const std::vector<double>& x,
                      const std::vector<std::vector<double>>& v, int nt, int nr,
                      bool along_t, std::vector<std::vector<double>>& out) {
  out.assign(nt, std::vector<double>(nr, 0.0));
  if (along_t) {
    for (int j = 0; j < nr; ++j) {
      for (int i = 0; i < nt; ++i) {
        if (i == 0)
          out[i][j] = (-3.0 * v[0][j] + 4.0 * v[1][j] - v[2][j]) / (x[2] - x[0]);
        else if (i == nt - 1)
          out[i][j] =
              (3.0 * v[i][j] - 4.0 * v[i - 1][j] + v[i - 2][j]) / (x[i] - x[i - 2]);
        else
          out[i][j] = (v[i + 1][j] - v[i - 1][j]) / (x[i + 1] - x[i - 1]);
      }
    }
  } else {
    for (int i = 0; i < nt; ++i) {
      for (int j = 0; j < nr; ++j) {
        if (j == 0)
          out[i][j] = (-3.0 * v[i][0] + 4.0 * v[i][1] - v[i][2]) / (x[2] - x[0]);
        else if (j == nr - 1)
          out[i][j] =
              (3.0 * v[i][j] - 4.0 * v[i][j - 1] + v[i][j - 2]) / (x[j] - x[j - 2]);
        else
          out[i][j] = (v[i][j + 1] - v[i][j - 1]) / (x[j + 1] - x[j - 1]);
      }
    }
  }
}

inline Tables build_tables(const FieldSlab& f, const Chart& ch) {
  if (f.t.size() < 3 || f.r.size() < 3)
    throw std::invalid_argument("slab needs at least a 3 x 3 grid");
  Tables tb;
  tb.f = &f;
  tb.l = f.l;
  tb.nt = static_cast<int>(f.t.size());
  tb.nr = static_cast<int>(f.r.size());
  diff_rows(f.t, f.v, tb.nt, tb.nr, true, tb.ft);
  diff_rows(f.r, f.v, tb.nt, tb.nr, false, tb.fr);
  tb.q.assign(tb.nt, std::vector<double>(tb.nr, 0.0));
  for (int i = 0; i < tb.nt; ++i)
    for (int j = 0; j < tb.nr; ++j)
      tb.q[i][j] = (f.r[j] > 0.0) ? f.v[i][j] / f.r[j] : tb.fr[i][j];
  tb.u.assign(tb.nt, std::vector<double>(tb.nr, 0.0));
  tb.ut.assign(tb.nt, std::vector<double>(tb.nr, 0.0));
  tb.ur.assign(tb.nt, std::vector<double>(tb.nr, 0.0));
  for (int i = 0; i < tb.nt; ++i)
    for (int j = 0; j < tb.nr; ++j) {
      J1 tj = make_coord<J1>(f.t[i], 0);
      J1 rj = make_coord<J1>(f.r[j], 1);
      J1 uj = ch.u_of(tj, rj);
      tb.u[i][j] = uj.v;
      tb.ut[i][j] = uj.d[0];
      tb.ur[i][j] = uj.d[1];
    }
  return tb;
}

/* pointwise kit handed to density builders */
struct Point {
  double t, r, phi, ft, fr, q, u, ut, ur;
  double tp, tm, t0; /* tau_+, tau_-, tau_0 */
  double dtr;        /* dtilde_r phi */
};

inline Point point_at(const Tables& tb, const Chart& ch, int i, int j) {
  Point p;
  p.t = tb.f->t[i];
  p.r = tb.f->r[j];
  p.phi = tb.f->v[i][j];
  p.ft = tb.ft[i][j];
  p.fr = tb.fr[i][j];
  p.q = tb.q[i][j];
  p.u = tb.u[i][j];
  p.ut = tb.ut[i][j];
  p.ur = tb.ur[i][j];
  p.tm = jap(p.u);
  p.tp = tau_plus(p.u, p.r, ch.C_tau);
  p.t0 = p.tm / p.tp;
  p.dtr = p.fr - (p.ur / p.ut) * p.ft;
  return p;
}

/* spacetime regions split by the cone, sharp and disjoint */
enum class Region { all, inside, outside, wave, inside_or_outside };

inline bool in_region(Region rg, double t, double r) {
  switch (rg) {
    case Region::all: return true;
    case Region::inside: return r < 0.5 * t;
    case Region::outside: return r > 2.0 * t;
    case Region::wave: return r >= 0.5 * t && r <= 2.0 * t;
    case Region::inside_or_outside: return r < 0.5 * t || r > 2.0 * t;
  }
  return true;
}

/* squared integrands multiplied by r^2; the a, b weights ride on the slab
 * for derivative kinds and on the density for the source kinds */
enum class Density {
  grad_le,   /* <r>^{-1} |grad phi|^2 r^2 */
  low_le,    /* <r>^{-3} phi^2 r^2 */
  src_le,    /* <r> F^2 r^2 */
  field_nle, /* <r>^{-1} phi^2 r^2 */
  src_nle    /* <r> F^2 r^2 */
};

inline double density_at(Density d, const Point& p, double L) {
  double r2 = p.r * p.r;
  double br = jap(p.r);
  switch (d) {
    case Density::grad_le:
      /* L (phi/r)^2 r^2 collapses to L phi^2, exact at the axis */
      return ((p.ft * p.ft + p.fr * p.fr) * r2 + L * p.phi * p.phi) / br;
    case Density::low_le: {
      double b3 = br * br * br;
      return p.phi * p.phi * r2 / b3;
    }
    case Density::src_le:
      return br * p.phi * p.phi * r2;
    case Density::field_nle:
      return p.phi * p.phi * r2 / br;
    case Density::src_nle:
      return br * p.phi * p.phi * r2;
  }
  return 0.0;
}

/* trapezoid weights over the index range [lo, hi] of an ascending axis */
inline std::vector<double> trap_weights(const std::vector<double>& x, int lo, int hi) {
  std::vector<double> w(x.size(), 0.0);
  for (int i = lo; i < hi; ++i) {
    double h = x[i + 1] - x[i];
    w[i] += 0.5 * h;
    w[i + 1] += 0.5 * h;
  }
  return w;
}

struct BlockKey {
  int iu = -1; /* -1: axis unused */
  int ir = -1;
};

/* L^2 over the slab for one (u-block, r-block) pair; either index may be
 * inactive. Sharp cuts enter as node indicators, smooth ones as chi^2. */
inline double block_l2(const Tables& tb, const Chart& ch, Density dens, Region rg,
                       double a, double b, const DyadicPartition* pr,
                       const DyadicPartition* pu, BlockKey key, int it_lo,
                       int it_hi) {
  const FieldSlab& f = *tb.f;
  double L = static_cast<double>(tb.l) * (tb.l + 1);
  std::vector<double> tw = trap_weights(f.t, it_lo, it_hi);
  std::vector<double> rw = trap_weights(f.r, 0, static_cast<int>(f.r.size()) - 1);
  KahanSum acc;
  for (int i = it_lo; i <= it_hi; ++i) {
    for (int j = 0; j < tb.nr; ++j) {
      Point p = point_at(tb, ch, i, j);
      if (!in_region(rg, p.t, p.r)) continue;
      double chi = 1.0;
      if (key.ir >= 0) chi *= pr->weight(key.ir, p.r);
      if (key.iu >= 0) chi *= pu->weight(key.iu, p.u);
      if (chi == 0.0) continue;
      double wgt = 1.0;
      if (a != 0.0) wgt *= std::pow(p.tp, 2.0 * a);
      if (b != 0.0) wgt *= std::pow(p.t0, 2.0 * b);
      acc.add(tw[i] * rw[j] * chi * chi * wgt * density_at(dens, p, L));
    }
  }
  return std::sqrt(std::max(acc.value(), 0.0));
}

/* ell^p over dyadic blocks of a block_l2 family */
inline double ell_p(const Tables& tb, const Chart& ch, Density dens, Region rg,
                    double a, double b, bool use_u, bool p_sum, CutStyle style,
                    int it_lo, int it_hi) {
  double rmax = tb.f->r.back();
  DyadicPartition pr = DyadicPartition::over(Axis::r, style, rmax);
  double umax = 1.0;
  for (int i = it_lo; i <= it_hi; ++i)
    for (int j = 0; j < tb.nr; ++j) umax = std::max(umax, std::fabs(tb.u[i][j]));
  DyadicPartition pu = DyadicPartition::over(Axis::u, style, umax);
  double best = 0.0;
  KahanSum sum;
  for (int ir = pr.i_lo; ir <= pr.i_hi; ++ir) {
    if (!use_u) {
      BlockKey key;
      key.ir = ir;
      double v = block_l2(tb, ch, dens, rg, a, b, &pr, nullptr, key, it_lo, it_hi);
      if (p_sum)
        sum.add(v);
      else
        best = std::max(best, v);
      continue;
    }
    for (int iu = pu.i_lo; iu <= pu.i_hi; ++iu) {
      BlockKey key;
      key.ir = ir;
      key.iu = iu;
      double v = block_l2(tb, ch, dens, rg, a, b, &pr, &pu, key, it_lo, it_hi);
      if (p_sum)
        sum.add(v);
      else
        best = std::max(best, v);
    }
  }
  return p_sum ? sum.value() : best;
}

/* weighted or conjugated copies of a slab */
inline FieldSlab weighted_slab(const FieldSlab& f, const Chart& ch,
                               const std::function<double(const Point&)>& w,
                               const Tables& tb) {
  FieldSlab g = f;
  for (int i = 0; i < tb.nt; ++i)
    for (int j = 0; j < tb.nr; ++j) {
      Point p = point_at(tb, ch, i, j);
      g.v[i][j] = f.v[i][j] * w(p);
    }
  return g;
}

/* indices of the slab times inside [t0, t1] */
inline void t_range(const FieldSlab& f, double t0, double t1, int& lo, int& hi) {
  double tol = 1e-9 * (1.0 + std::fabs(t1));
  lo = -1;
  hi = -2;
  for (int i = 0; i < static_cast<int>(f.t.size()); ++i) {
    if (f.t[i] >= t0 - tol && lo < 0) lo = i;
    if (f.t[i] <= t1 + tol) hi = i;
  }
  if (lo < 0 || hi < lo + 1)
    throw std::invalid_argument("interval not covered by the trace");
}

/* smallest dyadic t-block meeting [t0, t1] must resolve the sampling */
inline void check_sampling(const FieldSlab& f, double t0, double t1) {
  double width = 2.0; /* block k = 0 is [0, 2) */
  if (t0 >= 2.0) {
    int k = static_cast<int>(std::floor(std::log2(t0)));
    width = std::pow(2.0, k);
  }
  (void)t1;
  double dt = (f.t.back() - f.t.front()) / (static_cast<double>(f.t.size()) - 1.0);
  if (dt > width) throw std::runtime_error("insufficient sampling");
}

/* every other time row, keeping the final one so the interval survives */
inline FieldSlab thin_t(const FieldSlab& f) {
  FieldSlab g;
  g.l = f.l;
  g.id = f.id;
  g.r = f.r;
  int nt = static_cast<int>(f.t.size());
  for (int i = 0; i < nt; i += 2) {
    g.t.push_back(f.t[i]);
    g.v.push_back(f.v[i]);
  }
  if ((nt - 1) % 2 != 0) {
    g.t.push_back(f.t[nt - 1]);
    g.v.push_back(f.v[nt - 1]);
  }
  return g;
}

/* every other radial node, keeping the outer edge */
inline FieldSlab thin_r(const FieldSlab& f) {
  FieldSlab g;
  g.l = f.l;
  g.id = f.id;
  g.t = f.t;
  int nr = static_cast<int>(f.r.size());
  std::vector<int> keep;
  for (int j = 0; j < nr; j += 2) keep.push_back(j);
  if ((nr - 1) % 2 != 0) keep.push_back(nr - 1);
  for (int j : keep) g.r.push_back(f.r[j]);
  for (const std::vector<double>& row : f.v) {
    std::vector<double> thin;
    thin.reserve(keep.size());
    for (int j : keep) thin.push_back(row[j]);
    g.v.push_back(std::move(thin));
  }
  return g;
}

/* LE with weights tau_+^a tau_0^b applied as a slab multiplier */
inline double le_core(const FieldSlab& f, const Chart& ch, double a, double b,
                      Region rg, CutStyle style, int it_lo, int it_hi) {
  Tables tb = build_tables(f, ch);
  if (a == 0.0 && b == 0.0) {
    double g =
        ell_p(tb, ch, Density::grad_le, rg, 0, 0, false, false, style, it_lo, it_hi);
    double lw =
        ell_p(tb, ch, Density::low_le, rg, 0, 0, false, false, style, it_lo, it_hi);
    return g + lw;
  }
  FieldSlab wf = weighted_slab(
      f, ch, [a, b](const Point& p) { return std::pow(p.tp, a) * std::pow(p.t0, b); },
      tb);
  return le_core(wf, ch, 0.0, 0.0, rg, style, it_lo, it_hi);
}

inline FieldSlab conjugated_gradient_slab(const FieldSlab& f, const Chart& ch,
                                          bool omega_two, const Tables& tb) {
  /* h = Omega^{-1} dtilde_r (Omega phi), differenced on the slab */
  FieldSlab psi = weighted_slab(
      f, ch,
      [omega_two](const Point& p) { return omega_two ? p.tm * p.tp : jap(p.r); }, tb);
  Tables tp = build_tables(psi, ch);
  FieldSlab h = f;
  h.id = f.id + (omega_two ? ":h2" : ":h1");
  for (int i = 0; i < tp.nt; ++i)
    for (int j = 0; j < tp.nr; ++j) {
      Point p = point_at(tp, ch, i, j);
      double om = omega_two ? p.tm * p.tp : jap(p.r);
      h.v[i][j] = p.dtr / om;
    }
  return h;
}

inline double ch_core(const FieldSlab& f, const Chart& ch, bool omega_two,
                      CutStyle style, int it_lo, int it_hi) {
  Tables tb = build_tables(f, ch);
  FieldSlab h = conjugated_gradient_slab(f, ch, omega_two, tb);
  /* <r>^{1/2} h in NLE^{1/2,-1/2}: net density tau_+ tau_0^{-1} h^2 r^2 */
  Tables th = build_tables(h, ch);
  FieldSlab g = weighted_slab(h, ch, [](const Point& p) { return jap(p.r); }, th);
  Tables tg = build_tables(g, ch);
  return ell_p(tg, ch, Density::field_nle, Region::all, 0.5, -0.5, true, false, style,
               it_lo, it_hi);
}

/* sup over dyadic t-blocks of the interior LE^1 norm of a slab family */
inline double interior_sup(const std::vector<const FieldSlab*>& family,
                           const Chart& ch, CutStyle style, int lo, int hi) {
  const FieldSlab& f = *family.front();
  DyadicPartition pt = DyadicPartition::over(Axis::t, CutStyle::sharp, f.t[hi]);
  double sup = 0.0;
  for (int k = pt.i_lo; k <= pt.i_hi; ++k) {
    double blo = (k == 0) ? 0.0 : std::pow(2.0, k);
    double bhi = std::pow(2.0, k + 1);
    int klo = -1, khi = -2;
    for (int i = lo; i <= hi; ++i)
      if (f.t[i] >= blo && f.t[i] < bhi) {
        if (klo < 0) klo = i;
        khi = i;
      }
    if (klo < 0 || khi < klo + 1) continue;
    double acc = 0.0;
    for (const FieldSlab* s : family)
      acc += le_core(*s, ch, 1.0, 0.0, Region::inside, style, klo, khi);
    sup = std::max(sup, acc);
  }
  return sup;
}

inline double spacetime_value(const NormSpec& spec, const FieldSlab& f,
                              const Chart& ch, double t0, double t1) {
  int lo, hi;
  t_range(f, t0, t1, lo, hi);
  switch (spec.kind) {
    case NormKind::LE:
      return le_core(f, ch, spec.a, spec.b, Region::all, spec.style, lo, hi);
    case NormKind::LEstar: {
      Tables tb = build_tables(f, ch);
      return ell_p(tb, ch, Density::src_le, Region::all, spec.a, spec.b, false, true,
                   spec.style, lo, hi);
    }
    case NormKind::NLE: {
      Tables tb = build_tables(f, ch);
      return ell_p(tb, ch, Density::field_nle, Region::all, spec.a, spec.b, true,
                   false, spec.style, lo, hi);
    }
    case NormKind::NLEstar: {
      Tables tb = build_tables(f, ch);
      return ell_p(tb, ch, Density::src_nle, Region::all, spec.a, spec.b, true, true,
                   spec.style, lo, hi);
    }
    case NormKind::CH_I:
      return ch_core(f, ch, false, spec.style, lo, hi);
    case NormKind::CH_II:
      return ch_core(f, ch, true, spec.style, lo, hi);
    case NormKind::Snorm: {
      double v = ch_core(f, ch, false, spec.style, lo, hi) +
                 ch_core(f, ch, true, spec.style, lo, hi);
      return v + interior_sup({&f}, ch, spec.style, lo, hi);
    }
    case NormKind::Nnorm: {
      Tables tb = build_tables(f, ch);
      double in_out =
          ell_p(tb, ch, Density::src_le, Region::inside_or_outside, spec.a + 1.0,
                spec.b + 0.5, false, true, spec.style, lo, hi);
      double wave = ell_p(tb, ch, Density::src_nle, Region::wave, spec.a + 1.0,
                          spec.b + 0.5, true, true, spec.style, lo, hi);
      return in_out + wave;
    }
    default:
      throw std::invalid_argument("not a spacetime norm kind");
  }
}

inline double fixedtime_value(const NormSpec& spec, const FieldSlab& f,
                              const Chart& ch, double t) {
  int it = -1;
  for (int i = 0; i < static_cast<int>(f.t.size()); ++i)
    if (std::fabs(f.t[i] - t) < 1e-9 * (1.0 + std::fabs(t))) it = i;
  if (it < 0) throw std::invalid_argument("no snapshot at the requested time");

  Tables tb = build_tables(f, ch);
  double L = static_cast<double>(f.l) * (f.l + 1);
  std::vector<double> rw = trap_weights(f.r, 0, static_cast<int>(f.r.size()) - 1);

  auto radial_l2 = [&](const std::function<double(const Point&, int)>& dens) {
    KahanSum acc;
    for (int j = 0; j < tb.nr; ++j) {
      Point p = point_at(tb, ch, it, j);
      acc.add(rw[j] * dens(p, j));
    }
    return std::sqrt(std::max(acc.value(), 0.0));
  };

  switch (spec.kind) {
    case NormKind::CE: {
      double e1 = radial_l2([&](const Point& p, int) {
        double g2 = (p.ft * p.ft + p.fr * p.fr) * p.r * p.r + L * p.phi * p.phi;
        return p.tp * p.tp * p.t0 * p.t0 * g2;
      });
      double e2 = radial_l2([&](const Point& p, int) {
        return p.tp * p.tp *
               (p.dtr * p.dtr * p.r * p.r + (L + 1.0) * p.phi * p.phi);
      });
      return e1 + e2;
    }
    case NormKind::CE_I:
    case NormKind::CE_II: {
      bool two = spec.kind == NormKind::CE_II;
      FieldSlab psi = weighted_slab(
          f, ch, [two](const Point& p) { return two ? p.tm * p.tp : jap(p.r); }, tb);
      Tables tp = build_tables(psi, ch);
      KahanSum a1, a2;
      for (int j = 0; j < tb.nr; ++j) {
        Point p = point_at(tp, ch, it, j);
        double om = two ? p.tm * p.tp : jap(p.r);
        double gt = p.ft / om, gr = p.fr / om, gp = p.phi / om, gtr = p.dtr / om;
        double r2 = p.r * p.r;
        a1.add(rw[j] * p.tp * p.tp * p.t0 * p.t0 *
               ((gt * gt + gr * gr) * r2 + L * gp * gp));
        a2.add(rw[j] * p.tp * p.tp * (gtr * gtr * r2 + L * gp * gp));
      }
      return std::sqrt(std::max(a1.value(), 0.0)) +
             std::sqrt(std::max(a2.value(), 0.0));
    }
    case NormKind::L2grad:
      return radial_l2([&](const Point& p, int) {
        return (p.ft * p.ft + p.fr * p.fr) * p.r * p.r + L * p.phi * p.phi;
      });
    case NormKind::Hsak: {
      if (spec.s > 1 || spec.k > 1 || spec.s < 0 || spec.k < 0)
        throw std::invalid_argument("weighted data spaces cover s, k <= 1 only");
      /* graded radial reduction of the gradient powers */
      std::vector<std::vector<double>> frr, qr;
      diff_rows(f.r, tb.fr, tb.nt, tb.nr, false, frr);
      diff_rows(f.r, tb.q, tb.nt, tb.nr, false, qr);
      double total = 0.0;
      for (int mo = 0; mo <= spec.s; ++mo)
        for (int no = 0; no <= spec.k; ++no) {
          int ord = mo + no;
          double wexp = spec.a + no;
          total += radial_l2([&](const Point& p, int j) {
            double w2 = std::pow(jap(p.r), 2.0 * wexp);
            double r2 = p.r * p.r;
            double g2;
            if (ord == 0)
              g2 = p.phi * p.phi * r2;
            else if (ord == 1)
              g2 = p.fr * p.fr * r2 + L * p.phi * p.phi;
            else {
              double d2 = frr[it][j];
              double dq = qr[it][j];
              g2 = d2 * d2 * r2 + 2.0 * p.fr * p.fr + L * dq * dq * r2 +
                   L * L * p.q * p.q;
            }
            return w2 * g2;
          });
        }
      return total;
    }
    default:
      throw std::invalid_argument("not a fixed-time norm kind");
  }
}

}  // namespace detail_norms

/* ----- spacetime norms ----- */

inline NormValue spacetime_norm(const NormSpec& spec, const FieldSlab& f,
                                const MetricModel& m, double t0, double t1) {
  using namespace detail_norms;
  const Chart& ch = m.chart;
  int lo, hi;
  t_range(f, t0, t1, lo, hi);
  check_sampling(f, t0, t1);
  NormValue out;
  out.kind = kind_name(spec.kind);
  out.t0 = f.t[lo];
  out.t1 = f.t[hi];
  out.field = f.id;
  out.value = spacetime_value(spec, f, ch, t0, t1);
  FieldSlab half = thin_t(f);
  out.err_est = std::fabs(out.value - spacetime_value(spec, half, ch, t0, t1));
  return out;
}

/* ----- fixed-time norms ----- */

inline NormValue fixedtime_norm(const NormSpec& spec, const FieldSlab& f,
                                const MetricModel& m, double t) {
  using namespace detail_norms;
  NormValue out;
  out.kind = kind_name(spec.kind);
  out.t0 = t;
  out.t1 = t;
  out.field = f.id;
  out.value = fixedtime_value(spec, f, m.chart, t);
  FieldSlab half = thin_r(f);
  out.err_est = std::fabs(out.value - fixedtime_value(spec, half, m.chart, t));
  return out;
}

/* ----- higher order norms ----- */

inline FieldSlab gamma_slab(const FieldSlab& f, const MetricModel& m, GammaField g) {
  using namespace detail_norms;
  if (g != GammaField::T && g != GammaField::S)
    throw std::invalid_argument("rotations out of numeric scope");
  Tables tb = build_tables(f, m.chart);
  FieldSlab out = f;
  out.id = f.id + (g == GammaField::T ? ":T" : ":S");
  for (int i = 0; i < tb.nt; ++i)
    for (int j = 0; j < tb.nr; ++j) {
      Point p = point_at(tb, m.chart, i, j);
      if (g == GammaField::T)
        out.v[i][j] = p.ft / p.ut;
      else
        out.v[i][j] = (p.u - p.r * p.ur) / p.ut * p.ft + p.r * p.fr;
    }
  return out;
}

inline NormValue higher_order_norm(const NormSpec& spec, const FieldSlab& f,
                                   const MetricModel& m,
                                   const std::vector<GammaField>& fields, double t0,
                                   double t1) {
  using namespace detail_norms;
  for (GammaField g : fields)
    if (g != GammaField::T && g != GammaField::S)
      throw std::invalid_argument("rotations out of numeric scope");
  const Chart& ch = m.chart;

  std::vector<FieldSlab> family;
  family.push_back(f);
  for (GammaField g : fields) family.push_back(gamma_slab(f, m, g));

  NormValue out;
  out.t0 = t0;
  out.t1 = t1;
  out.field = f.id;

  if (spec.kind == NormKind::N1 || spec.kind == NormKind::M1) {
    /* sum of N over the derivative family plus the interior tail term */
    NormSpec nsp = spec;
    nsp.kind = NormKind::Nnorm;
    nsp.a = 0.0;
    nsp.b = 0.0;
    double total = 0.0, err = 0.0;
    std::vector<FieldSlab> srcs;
    if (spec.kind == NormKind::N1) {
      srcs = family;
    } else {
      /* adapted derivatives: (tau_+ tau_0 d_u)^k (r dtilde_x)^J, k + |J| <= 1 */
      Tables tb = build_tables(f, ch);
      FieldSlab du = f;
      du.id = f.id + ":du";
      FieldSlab rdx = f;
      rdx.id = f.id + ":rdx";
      for (int i = 0; i < tb.nt; ++i)
        for (int j = 0; j < tb.nr; ++j) {
          Point p = point_at(tb, ch, i, j);
          du.v[i][j] = p.tp * p.t0 * p.ft / p.ut;
          rdx.v[i][j] = p.r * p.dtr;
        }
      srcs = {f, du, rdx};
    }
    for (const FieldSlab& s : srcs) {
      NormValue v = spacetime_norm(nsp, s, m, t0, t1);
      total += v.value;
      err += v.err_est;
    }
    /* interior tail: LE^{2 - gamma/4} over r < t/2 */
    int lo, hi;
    t_range(f, t0, t1, lo, hi);
    double aexp = 2.0 - spec.gamma / 4.0;
    double tail = le_core(f, ch, aexp, 0.0, Region::inside, spec.style, lo, hi);
    FieldSlab half = thin_t(f);
    int hlo, hhi;
    t_range(half, t0, t1, hlo, hhi);
    double tail_half =
        le_core(half, ch, aexp, 0.0, Region::inside, spec.style, hlo, hhi);
    out.kind = kind_name(spec.kind);
    out.value = total + tail;
    out.err_est = err + std::fabs(tail - tail_half);
    return out;
  }

  if (spec.kind == NormKind::Snorm) {
    /* null terms add over the family; the interior term takes the sup of
     * the summed block values */
    double total = 0.0, err = 0.0;
    for (const FieldSlab& s : family) {
      NormSpec csp = spec;
      csp.kind = NormKind::CH_I;
      NormValue v1 = spacetime_norm(csp, s, m, t0, t1);
      csp.kind = NormKind::CH_II;
      NormValue v2 = spacetime_norm(csp, s, m, t0, t1);
      total += v1.value + v2.value;
      err += v1.err_est + v2.err_est;
    }
    int lo, hi;
    t_range(f, t0, t1, lo, hi);
    std::vector<const FieldSlab*> view;
    for (const FieldSlab& s : family) view.push_back(&s);
    out.kind = "S1";
    out.value = total + interior_sup(view, ch, spec.style, lo, hi);
    out.err_est = err;
    return out;
  }

  /* plain sum over the family */
  auto base_eval = [&](const FieldSlab& slab) {
    switch (spec.kind) {
      case NormKind::CE:
      case NormKind::CE_I:
      case NormKind::CE_II:
      case NormKind::L2grad:
      case NormKind::Hsak:
        return fixedtime_norm(spec, slab, m, t0);
      default:
        return spacetime_norm(spec, slab, m, t0, t1);
    }
  };
  double total = 0.0, err = 0.0;
  for (const FieldSlab& s : family) {
    NormValue v = base_eval(s);
    total += v.value;
    err += v.err_est;
  }
  out.kind = kind_name(spec.kind) + "1";
  out.value = total;
  out.err_est = err;
  return out;
}

/* ----- weighted pointwise decay ----- */

struct EnvelopePoint {
  double t = 0.0;
  double value = 0.0;
};

struct LinfResult {
  double sup = 0.0;
  std::vector<EnvelopePoint> envelope;
};

inline LinfResult weighted_linf(const FieldSlab& f, const MetricModel& m, double t0,
                                double t1) {
  using namespace detail_norms;
  Tables tb = build_tables(f, m.chart);
  int lo, hi;
  t_range(f, t0, t1, lo, hi);
  LinfResult out;
  for (int i = lo; i <= hi; ++i) {
    double best = 0.0;
    for (int j = 0; j < tb.nr; ++j) {
      Point p = point_at(tb, m.chart, i, j);
      double w = std::pow(p.tp, 1.5) * std::sqrt(p.t0) * std::fabs(p.phi);
      best = std::max(best, w);
    }
    out.envelope.push_back({f.t[i], best});
    out.sup = std::max(out.sup, best);
  }
  return out;
}

}  // namespace rad

#endif
