#ifndef RADIANT_FIELDS_HPP
#define RADIANT_FIELDS_HPP

/* Multiplier and commutator vector fields, given in Bondi components
 * (X^u, X^i) as maps of (u, x), together with the conformal weights and the
 * cutoff families they ride with.  Seeding u and x as coordinates yields
 * Bondi-chart jets of every component; lifting u = u(t,x) through a chart
 * yields (t,x)-chart jets of the same objects, so one definition serves both
 * pictures. */

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

#include "chart.hpp"
#include "jets.hpp"
#include "linalg.hpp"
#include "numerics.hpp"

namespace rad {

/* ----- dyadic multiplier cutoffs -----
 *
 * chi_less(j, u) is 1 below the band and slides to 0 across <u> in
 * [2^j, 2^{j+2}], realized as a C^3 step in log2<u> and constant for u <= 0.
 * The width-2 window keeps |d^l q_j / du^l| <= 2 <u>^{-l} for l <= 2 (checked
 * in the suite).  Bands with j < 0 are empty since <u> >= 1. */
template <class S>
S chi_less(int j, const S& u) {
  if (j < 0) throw std::invalid_argument("chi_less needs j >= 0");
  if (vof(u) <= 0.0) return make_const<S>(1.0);
  using std::log;
  S l = log(jap(u)) * (1.0 / std::log(2.0));
  return cut_above(l, static_cast<double>(j), static_cast<double>(j) + 2.0);
}

template <class S>
S q_weight(int j, const S& u) {
  return chi_less(j, u) + 1.0;
}

/* chi_j = -2^j chi_less' >= 0, supported where <u> is in [2^j, 2^{j+2}] */
inline double chi_band(int j, double u) {
  J1 uj = make_coord<J1>(u, 0);
  return -std::ldexp(1.0, j) * chi_less(j, uj).d[0];
}

/* ----- interior cutoff: 1 on r <= t/8, 0 on r >= t/4, quintic in r/t ----- */
template <class S>
S chi_interior(const S& t, const V3<S>& x) {
  double tv = vof(t);
  if (tv <= 0.0) return make_const<S>(0.0);
  S r2 = dot3(x, x);
  double rv2 = vof(r2);
  if (rv2 <= tv * tv / 64.0) return make_const<S>(1.0);
  if (rv2 >= tv * tv / 16.0) return make_const<S>(0.0);
  using std::sqrt;
  S rho = sqrt(r2) / t;
  return 1.0 - sstep5((rho - 0.125) * 8.0);
}

enum class ChiId { zero, one, interior };

template <class S>
S chi_eval(ChiId id, const S& t, const V3<S>& x) {
  switch (id) {
    case ChiId::zero:
      return make_const<S>(0.0);
    case ChiId::one:
      return make_const<S>(1.0);
    default:
      return chi_interior(t, x);
  }
}

inline std::string to_string(ChiId id) {
  switch (id) {
    case ChiId::zero:
      return "zero";
    case ChiId::one:
      return "one";
    default:
      return "interior";
  }
}

/* ----- conformal weights -----
 *
 * bracket_r is <r>, tau_pair is tau_- tau_+, and plain_r is the classical
 * flat weight r.  tau_pair and plain_r are Bondi-polar objects and need
 * r > 0; bracket_r and 1 are smooth across the axis. */
enum class OmegaId { one, bracket_r, tau_pair, plain_r };

template <class S>
S omega_eval(OmegaId id, double C, const S& u, const V3<S>& x) {
  using std::sqrt;
  switch (id) {
    case OmegaId::one:
      return make_const<S>(1.0);
    case OmegaId::bracket_r:
      return sqrt(dot3(x, x) + 1.0);
    case OmegaId::tau_pair: {
      S r = sqrt(dot3(x, x));
      return jap(u) * (u + r * 2.0 + C);
    }
    default:
      return sqrt(dot3(x, x));
  }
}

inline bool omega_needs_axis_guard(OmegaId id) {
  return id == OmegaId::tau_pair || id == OmegaId::plain_r;
}

inline std::string to_string(OmegaId id) {
  switch (id) {
    case OmegaId::one:
      return "one";
    case OmegaId::bracket_r:
      return "bracket_r";
    case OmegaId::tau_pair:
      return "tau_pair";
    default:
      return "plain_r";
  }
}

/* ----- vector fields ----- */

template <class S>
struct VfComps {
  S u;
  V3<S> x;
};

enum class VfId { T, S, O12, O13, O23, K0, Yj, Xj, Kmink, radial, custom };

class VectorField {
 public:
  virtual ~VectorField() = default;

  VfId id = VfId::custom;
  std::string name = "custom";
  int j = 0; /* dyadic index, used by Yj and Xj */

  virtual VfComps<double> c0(double u, const V3<double>& x) const = 0;
  virtual VfComps<J1> c1(const J1& u, const V3<J1>& x) const = 0;
  virtual VfComps<J2> c2(const J2& u, const V3<J2>& x) const = 0;
  virtual VfComps<J3> c3(const J3& u, const V3<J3>& x) const = 0;
};

template <class Impl>
class VectorFieldT : public VectorField {
 public:
  VfComps<double> c0(double u, const V3<double>& x) const override {
    return self()->template comps<double>(u, x);
  }
  VfComps<J1> c1(const J1& u, const V3<J1>& x) const override {
    return self()->template comps<J1>(u, x);
  }
  VfComps<J2> c2(const J2& u, const V3<J2>& x) const override {
    return self()->template comps<J2>(u, x);
  }
  VfComps<J3> c3(const J3& u, const V3<J3>& x) const override {
    return self()->template comps<J3>(u, x);
  }

 private:
  const Impl* self() const { return static_cast<const Impl*>(this); }
};

template <class S>
VfComps<S> vf_comps(const VectorField& f, const S& u, const V3<S>& x) {
  constexpr int ord = jet_order<S>::value;
  if constexpr (ord == 0)
    return f.c0(u, x);
  else if constexpr (ord == 1)
    return f.c1(u, x);
  else if constexpr (ord == 2)
    return f.c2(u, x);
  else
    return f.c3(u, x);
}

class TField : public VectorFieldT<TField> {
 public:
  TField() {
    id = VfId::T;
    name = "T";
  }
  template <class S>
  VfComps<S> comps(const S&, const V3<S>&) const {
    S z = make_const<S>(0.0);
    return {make_const<S>(1.0), {z, z, z}};
  }
};

class SField : public VectorFieldT<SField> {
 public:
  SField() {
    id = VfId::S;
    name = "S";
  }
  template <class S>
  VfComps<S> comps(const S& u, const V3<S>& x) const {
    return {u, x};
  }
};

/* rotation x^a dtilde_b - x^b dtilde_a, axes 0-based */
class RotField : public VectorFieldT<RotField> {
 public:
  RotField(int a, int b, VfId which, std::string nm) : a_(a), b_(b) {
    id = which;
    name = std::move(nm);
  }
  template <class S>
  VfComps<S> comps(const S& u, const V3<S>& x) const {
    (void)u;
    S z = make_const<S>(0.0);
    VfComps<S> c{z, {z, z, z}};
    c.x[b_] = x[a_];
    c.x[a_] = -x[b_];
    return c;
  }

 private:
  int a_, b_;
};

/* K0 = tau_-^2 d_u + 2(u+r) r dtilde_r, off-axis like every radial field */
class K0Field : public VectorFieldT<K0Field> {
 public:
  K0Field() {
    id = VfId::K0;
    name = "K0";
  }
  template <class S>
  VfComps<S> comps(const S& u, const V3<S>& x) const {
    using std::sqrt;
    S r = sqrt(dot3(x, x));
    S w = (u + r) * 2.0;
    return {u * u + 1.0, {w * x[0], w * x[1], w * x[2]}};
  }
};

class KminkField : public VectorFieldT<KminkField> {
 public:
  KminkField() {
    id = VfId::Kmink;
    name = "Kmink";
  }
  template <class S>
  VfComps<S> comps(const S& u, const V3<S>& x) const {
    using std::sqrt;
    S r = sqrt(dot3(x, x));
    S w = (u + r) * 2.0;
    return {u * u, {w * x[0], w * x[1], w * x[2]}};
  }
};

class YjField : public VectorFieldT<YjField> {
 public:
  explicit YjField(int jj) {
    id = VfId::Yj;
    name = "Y" + std::to_string(jj);
    j = jj;
  }
  template <class S>
  VfComps<S> comps(const S& u, const V3<S>& x) const {
    (void)x;
    S z = make_const<S>(0.0);
    return {q_weight(j, u), {z, z, z}};
  }
};

class XjField : public VectorFieldT<XjField> {
 public:
  explicit XjField(int jj) {
    id = VfId::Xj;
    name = "X" + std::to_string(jj);
    j = jj;
  }
  template <class S>
  VfComps<S> comps(const S& u, const V3<S>& x) const {
    using std::sqrt;
    S q = q_weight(j, u);
    S r = sqrt(dot3(x, x));
    S w = q * ((u + r) * 2.0);
    return {q * (u * u + 1.0), {w * x[0], w * x[1], w * x[2]}};
  }
};

class RadialField : public VectorFieldT<RadialField> {
 public:
  RadialField() {
    id = VfId::radial;
    name = "radial";
  }
  template <class S>
  VfComps<S> comps(const S& u, const V3<S>& x) const {
    (void)u;
    using std::sqrt;
    S r = sqrt(dot3(x, x));
    return {make_const<S>(0.0), {x[0] / r, x[1] / r, x[2] / r}};
  }
};

inline std::unique_ptr<VectorField> make_field(VfId id, int j = 0) {
  switch (id) {
    case VfId::T:
      return std::make_unique<TField>();
    case VfId::S:
      return std::make_unique<SField>();
    case VfId::O12:
      return std::make_unique<RotField>(0, 1, VfId::O12, "Omega12");
    case VfId::O13:
      return std::make_unique<RotField>(0, 2, VfId::O13, "Omega13");
    case VfId::O23:
      return std::make_unique<RotField>(1, 2, VfId::O23, "Omega23");
    case VfId::K0:
      return std::make_unique<K0Field>();
    case VfId::Yj:
      return std::make_unique<YjField>(j);
    case VfId::Xj:
      return std::make_unique<XjField>(j);
    case VfId::Kmink:
      return std::make_unique<KminkField>();
    case VfId::radial:
      return std::make_unique<RadialField>();
    default:
      throw std::invalid_argument("make_field: no built-in for custom id");
  }
}

inline std::unique_ptr<VectorField> vf_parse(const std::string& s) {
  if (s == "T") return make_field(VfId::T);
  if (s == "S") return make_field(VfId::S);
  if (s == "Omega12") return make_field(VfId::O12);
  if (s == "Omega13") return make_field(VfId::O13);
  if (s == "Omega23") return make_field(VfId::O23);
  if (s == "K0") return make_field(VfId::K0);
  if (s == "Kmink") return make_field(VfId::Kmink);
  if (s == "radial") return make_field(VfId::radial);
  if (s.size() > 1 && (s[0] == 'Y' || s[0] == 'X') &&
      s.find_first_not_of("0123456789", 1) == std::string::npos) {
    int jj = std::stoi(s.substr(1));
    return make_field(s[0] == 'Y' ? VfId::Yj : VfId::Xj, jj);
  }
  throw std::invalid_argument("unknown vector field: " + s);
}

/* ----- scalar test fields, order-dispatched like the metric models ----- */

class ScalarField {
 public:
  virtual ~ScalarField() = default;
  virtual double s0(double t, const V3<double>& x) const = 0;
  virtual J1 s1(const J1& t, const V3<J1>& x) const = 0;
  virtual J2 s2(const J2& t, const V3<J2>& x) const = 0;
  virtual J3 s3(const J3& t, const V3<J3>& x) const = 0;
};

template <class Impl>
class ScalarFieldT : public ScalarField {
 public:
  double s0(double t, const V3<double>& x) const override {
    return self()->template eval<double>(t, x);
  }
  J1 s1(const J1& t, const V3<J1>& x) const override {
    return self()->template eval<J1>(t, x);
  }
  J2 s2(const J2& t, const V3<J2>& x) const override {
    return self()->template eval<J2>(t, x);
  }
  J3 s3(const J3& t, const V3<J3>& x) const override {
    return self()->template eval<J3>(t, x);
  }

 private:
  const Impl* self() const { return static_cast<const Impl*>(this); }
};

template <class S>
S scalar_eval(const ScalarField& f, const S& t, const V3<S>& x) {
  constexpr int ord = jet_order<S>::value;
  if constexpr (ord == 0)
    return f.s0(t, x);
  else if constexpr (ord == 1)
    return f.s1(t, x);
  else if constexpr (ord == 2)
    return f.s2(t, x);
  else
    return f.s3(t, x);
}

} /* namespace rad */

#endif
