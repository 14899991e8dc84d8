#ifndef RADIANT_JETS_HPP
#define RADIANT_JETS_HPP

/* Forward-mode jets over the 4 coordinates of a chart.  Nesting Jet<Jet<...>>
 * gives exact higher derivatives of every templated evaluation, which is what
 * the pointwise tensor identities are checked with. */

#include <array>
#include <cmath>
#include <cstddef>

namespace rad {

template <class T>
struct Jet {
  T v{};
  std::array<T, 4> d{};

  Jet() = default;
  Jet(const T& value) : v(value), d{} {}
  Jet(const T& value, const std::array<T, 4>& grad) : v(value), d(grad) {}
};

/* ----- scalar order / value extraction ----- */

template <class T>
struct jet_order {
  static constexpr int value = 0;
};
template <class T>
struct jet_order<Jet<T>> {
  static constexpr int value = 1 + jet_order<T>::value;
};

inline double vof(double x) { return x; }
template <class T>
double vof(const Jet<T>& x) {
  return vof(x.v);
}

template <class S>
S make_const(double c) {
  if constexpr (jet_order<S>::value == 0)
    return c;
  else {
    S r;
    r.v = make_const<typename std::decay_t<decltype(r.v)>>(c);
    return r;
  }
}

/* Seed coordinate `axis` (0..3) at value x, activating the derivative slot at
 * every nesting level. */
template <class S>
S make_coord(double x, int axis) {
  if constexpr (jet_order<S>::value == 0) {
    (void)axis;
    return x;
  } else {
    using Inner = std::decay_t<decltype(S{}.v)>;
    S r;
    r.v = make_coord<Inner>(x, axis);
    r.d[axis] = make_const<Inner>(1.0);
    return r;
  }
}

/* ----- arithmetic ----- */

template <class T>
Jet<T> operator+(const Jet<T>& a, const Jet<T>& b) {
  Jet<T> r;
  r.v = a.v + b.v;
  for (int i = 0; i < 4; ++i) r.d[i] = a.d[i] + b.d[i];
  return r;
}
template <class T>
Jet<T> operator-(const Jet<T>& a, const Jet<T>& b) {
  Jet<T> r;
  r.v = a.v - b.v;
  for (int i = 0; i < 4; ++i) r.d[i] = a.d[i] - b.d[i];
  return r;
}
template <class T>
Jet<T> operator-(const Jet<T>& a) {
  Jet<T> r;
  r.v = -a.v;
  for (int i = 0; i < 4; ++i) r.d[i] = -a.d[i];
  return r;
}
template <class T>
Jet<T> operator*(const Jet<T>& a, const Jet<T>& b) {
  Jet<T> r;
  r.v = a.v * b.v;
  for (int i = 0; i < 4; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
  return r;
}
template <class T>
Jet<T> operator/(const Jet<T>& a, const Jet<T>& b) {
  Jet<T> r;
  r.v = a.v / b.v;
  T w = b.v * b.v;
  for (int i = 0; i < 4; ++i) r.d[i] = (a.d[i] * b.v - a.v * b.d[i]) / w;
  return r;
}

/* mixed double ops */
template <class T>
Jet<T> operator+(const Jet<T>& a, double c) {
  Jet<T> r = a;
  r.v = a.v + make_const<T>(c);
  return r;
}
template <class T>
Jet<T> operator+(double c, const Jet<T>& a) {
  return a + c;
}
template <class T>
Jet<T> operator-(const Jet<T>& a, double c) {
  return a + (-c);
}
template <class T>
Jet<T> operator-(double c, const Jet<T>& a) {
  return (-a) + c;
}
template <class T>
Jet<T> operator*(const Jet<T>& a, double c) {
  Jet<T> r;
  T cc = make_const<T>(c);
  r.v = a.v * cc;
  for (int i = 0; i < 4; ++i) r.d[i] = a.d[i] * cc;
  return r;
}
template <class T>
Jet<T> operator*(double c, const Jet<T>& a) {
  return a * c;
}
template <class T>
Jet<T> operator/(const Jet<T>& a, double c) {
  return a * (1.0 / c);
}
template <class T>
Jet<T> operator/(double c, const Jet<T>& a) {
  return make_const<Jet<T>>(c) / a;
}

template <class T>
Jet<T>& operator+=(Jet<T>& a, const Jet<T>& b) {
  a = a + b;
  return a;
}
template <class T>
Jet<T>& operator-=(Jet<T>& a, const Jet<T>& b) {
  a = a - b;
  return a;
}
template <class T>
Jet<T>& operator*=(Jet<T>& a, const Jet<T>& b) {
  a = a * b;
  return a;
}

/* ----- elementary functions (chain rule) ----- */

namespace detail {
template <class T, class F>
Jet<T> lift(const Jet<T>& a, const T& fv, F dfv) {
  /* dfv: derivative value (already a T) */
  Jet<T> r;
  r.v = fv;
  for (int i = 0; i < 4; ++i) r.d[i] = dfv * a.d[i];
  return r;
}
}  // namespace detail

using std::cos;
using std::exp;
using std::log;
using std::pow;
using std::sin;
using std::sqrt;
using std::tanh;

template <class T>
Jet<T> sqrt(const Jet<T>& a) {
  T s = sqrt(a.v);
  return detail::lift(a, s, make_const<T>(0.5) / s);
}
template <class T>
Jet<T> exp(const Jet<T>& a) {
  T e = exp(a.v);
  return detail::lift(a, e, e);
}
template <class T>
Jet<T> log(const Jet<T>& a) {
  return detail::lift(a, log(a.v), make_const<T>(1.0) / a.v);
}
template <class T>
Jet<T> sin(const Jet<T>& a) {
  return detail::lift(a, sin(a.v), cos(a.v));
}
template <class T>
Jet<T> cos(const Jet<T>& a) {
  return detail::lift(a, cos(a.v), -sin(a.v));
}
template <class T>
Jet<T> tanh(const Jet<T>& a) {
  T t = tanh(a.v);
  return detail::lift(a, t, make_const<T>(1.0) - t * t);
}
template <class T>
Jet<T> pow(const Jet<T>& a, double p) {
  T f = pow(a.v, p);
  T df = pow(a.v, p - 1.0) * p;
  return detail::lift(a, f, df);
}

/* |x| with value-based branch; only used where the argument stays away from 0 */
template <class T>
Jet<T> fabs(const Jet<T>& a) {
  return vof(a) >= 0.0 ? a : -a;
}
using std::fabs;

/* common aliases */
using J1 = Jet<double>;
using J2 = Jet<Jet<double>>;
using J3 = Jet<Jet<Jet<double>>>;

/* ⟨x⟩ = sqrt(1+x²), used pervasively as the japanese bracket */
template <class S>
S jap(const S& x) {
  using std::sqrt;
  return sqrt(x * x + 1.0);
}

}  // namespace rad

#endif
