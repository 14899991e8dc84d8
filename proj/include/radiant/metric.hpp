#ifndef RADIANT_METRIC_HPP
#define RADIANT_METRIC_HPP

/* The model family.  Every model exposes the inverse metric g^{ab} in the
 * (t,x) chart at jet orders 0..3 behind one virtual interface, plus the Bondi
 * chart it prefers.  Components are smooth in (t,x); decay classes are
 * engineered in the Bondi picture. */

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "chart.hpp"
#include "jets.hpp"
#include "linalg.hpp"
#include "numerics.hpp"

namespace rad {

enum class ModelId { minkowski, schwarzschild_tail, radiating, custom_table };

inline std::string to_string(ModelId id) {
  switch (id) {
    case ModelId::minkowski: return "minkowski";
    case ModelId::schwarzschild_tail: return "schwarzschild_tail";
    case ModelId::radiating: return "radiating";
    default: return "custom-table";
  }
}

struct AsymptoticProfile {
  double delta = 0.5;
  double gamma = 0.25;
  double C_tau = 10.0;
  double amplitude = 0.25;
};

class MetricModel {
 public:
  virtual ~MetricModel() = default;

  ModelId id = ModelId::minkowski;
  std::string name = "minkowski";
  AsymptoticProfile profile;
  double mass = 1.0;       /* schwarzschild_tail only */
  bool spherical = true;   /* time-independent radial form usable by the solver */
  int deriv_order = 3;     /* continuous derivatives guaranteed by the formulas */
  Chart chart;

  virtual M4<double> inv0(double t, const V3<double>& x) const = 0;
  virtual M4<J1> inv1(const J1& t, const V3<J1>& x) const = 0;
  virtual M4<J2> inv2(const J2& t, const V3<J2>& x) const = 0;
  virtual M4<J3> inv3(const J3& t, const V3<J3>& x) const = 0;
};

template <class Impl>
class ModelT : public MetricModel {
 public:
  M4<double> inv0(double t, const V3<double>& x) const override {
    return static_cast<const Impl*>(this)->template eval<double>(t, x);
  }
  M4<J1> inv1(const J1& t, const V3<J1>& x) const override {
    return static_cast<const Impl*>(this)->template eval<J1>(t, x);
  }
  M4<J2> inv2(const J2& t, const V3<J2>& x) const override {
    return static_cast<const Impl*>(this)->template eval<J2>(t, x);
  }
  M4<J3> inv3(const J3& t, const V3<J3>& x) const override {
    return static_cast<const Impl*>(this)->template eval<J3>(t, x);
  }
};

template <class S>
M4<S> inv_metric(const MetricModel& m, const S& t, const V3<S>& x) {
  constexpr int ord = jet_order<S>::value;
  if constexpr (ord == 0)
    return m.inv0(t, x);
  else if constexpr (ord == 1)
    return m.inv1(t, x);
  else if constexpr (ord == 2)
    return m.inv2(t, x);
  else
    return m.inv3(t, x);
}

/* d^{1/2} in the (t,x) chart: |det g_{ab}|^{1/2} = (-det g^{ab})^{-1/2} */
template <class S>
S dsqrt_tx(const MetricModel& m, const S& t, const V3<S>& x) {
  using std::sqrt;
  S det = det4(inv_metric(m, t, x));
  return 1.0 / sqrt(-det);
}

/* du/dt at jet order S, obtained by one extra level of nesting */
template <class S>
S ut_of(const Chart& ch, const S& t, const V3<S>& x) {
  using JS = Jet<S>;
  JS tj;
  tj.v = t;
  tj.d[0] = make_const<S>(1.0);
  V3<JS> xj;
  for (int i = 0; i < 3; ++i) xj[i].v = x[i];
  JS uj = ch.u_tx(tj, xj);
  return uj.d[0];
}

/* d^{1/2} in the Bondi chart (u, x): the Jacobian of (t,x)->(u,x) is u_t */
template <class S>
S dsqrt_bondi(const MetricModel& m, const S& t, const V3<S>& x) {
  return dsqrt_tx(m, t, x) / ut_of(m.chart, t, x);
}

/* ----- Minkowski ----- */

class MinkowskiModel : public ModelT<MinkowskiModel> {
 public:
  MinkowskiModel() {
    id = ModelId::minkowski;
    name = "minkowski";
    profile.delta = 1.0;
    profile.gamma = 0.5;
    profile.amplitude = 0.0;
  }
  template <class S>
  M4<S> eval(const S&, const V3<S>&) const {
    return minkowski_inv<S>();
  }
};

/* ----- Schwarzschild tail -----
 * f = 1 - 2M/r blended to 1 inside r < 3M; the chart shift is the blended
 * tortoise integral, with a closed-form log tail past 4M. */

class TortoiseShift : public RadialFnT<TortoiseShift> {
 public:
  explicit TortoiseShift(double mass) : M(mass) {
    blend_const = gl_integrate([this](double s) { return gval(s); }, 3.0 * M, 4.0 * M,
                               gl32());
  }

  template <class S>
  S eval(const S& r) const {
    using std::log;
    double rv = vof(r);
    if (rv <= 3.0 * M) return make_const<S>(0.0);
    if (rv >= 4.0 * M) {
      return make_const<S>(blend_const) +
             (log(r - 2.0 * M) - std::log(2.0 * M)) * (2.0 * M);
    }
    /* jet-lifted Gauss rule over [3M, r]; integrand analytic inside the band */
    const GaussLegendre& g = gl32();
    S a = make_const<S>(3.0 * M);
    S h = (r - a) * 0.5, mid = (r + a) * 0.5;
    S acc = make_const<S>(0.0);
    for (std::size_t i = 0; i < g.x.size(); ++i) {
      S s = mid + h * g.x[i];
      acc = acc + gval_s(s) * (h * g.w[i]);
    }
    return acc;
  }

  template <class S>
  S ftilde(const S& r) const {
    double rv = vof(r);
    if (rv <= 3.0 * M) return make_const<S>(1.0);
    if (rv >= 4.0 * M) return make_const<S>(1.0) - (2.0 * M) / r;
    S chi = sstep7((r - 3.0 * M) * (1.0 / M));
    return make_const<S>(1.0) - chi * ((2.0 * M) / r);
  }

  double M;

 private:
  double gval(double s) const { return 1.0 / vof(ftilde(s)) - 1.0; }
  template <class S>
  S gval_s(const S& s) const {
    return 1.0 / ftilde(s) - 1.0;
  }
  double blend_const;
};

class SchwarzschildModel : public ModelT<SchwarzschildModel> {
 public:
  explicit SchwarzschildModel(double mass, const AsymptoticProfile& prof) : M(mass) {
    id = ModelId::schwarzschild_tail;
    name = "schwarzschild_tail";
    profile = prof;
    this->mass = mass;
    shift_ = std::make_shared<TortoiseShift>(mass);
    chart.C_tau = prof.C_tau;
    chart.shift = shift_;
  }

  template <class S>
  M4<S> eval(const S&, const V3<S>& x) const {
    S r2 = dot3(x, x);
    if (vof(r2) <= 9.0 * M * M) return minkowski_inv<S>();
    using std::sqrt;
    S r = sqrt(r2);
    S f = shift_->template ftilde<S>(r);
    M4<S> g = zero4<S>();
    g[0][0] = -1.0 / f;
    S w = (f - 1.0) / r2;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        g[i + 1][j + 1] = w * x[i] * x[j];
        if (i == j) g[i + 1][j + 1] = g[i + 1][j + 1] + 1.0;
      }
    }
    return g;
  }

  double M;

 private:
  std::shared_ptr<TortoiseShift> shift_;
};

/* ----- Radiating model -----
 * Perturbations ride log-periodic waveforms W(ln tau_minus) on smoothed
 * weights built from R = <r> and u = t - R, so every component is smooth in
 * (t,x) while the Bondi classes come out sharp:
 *   g^{uu}            ~ amplitude <r>^-delta tau0^2
 *   tangential g^{ui} ~ amplitude <r>^-delta tau0
 *   d^{1/2}g^{ui}+w^i ~ amplitude <r>^-delta tau0^{1/2}
 *   g^{ij}-delta^{ij} ~ amplitude <r>^-delta                                 */

class RadiatingModel : public ModelT<RadiatingModel> {
 public:
  explicit RadiatingModel(const AsymptoticProfile& prof) {
    id = ModelId::radiating;
    name = "radiating";
    profile = prof;
    spherical = false;
    chart.C_tau = prof.C_tau;
  }

  template <class S>
  M4<S> eval(const S& t, const V3<S>& x) const {
    using std::cos;
    using std::log;
    using std::pow;
    using std::sqrt;
    const double C = profile.C_tau;
    const double amp = profile.amplitude;
    const double del = profile.delta;

    S r2 = dot3(x, x);
    S br2 = r2 + 1.0; /* <r>^2 */
    S br = sqrt(br2);
    S us = t - br;
    S tm = sqrt(us * us + 1.0);
    S tp = us + br * 2.0 + C;
    S t0 = tm / tp;
    S P = pow(br2, -0.5 * del);
    S lt = log(tm);
    S Aa = cos(lt) * (amp)*P;
    S Ab = cos(lt + 1.0) * (amp)*P * sqrt(t0);
    S Ac = cos(lt + 2.0) * (amp)*P * t0;
    S Ad = cos(lt + 3.0) * (amp)*P * t0 * t0;

    S rho2 = r2 / br2;
    S q = -Ad;
    S Phi = Aa * rho2 + Ab * (1.0 - rho2);

    const V3<double> e{1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0};
    S xe = x[0] * e[0] + x[1] * e[1] + x[2] * e[2];

    M4<S> g = zero4<S>();
    g[0][0] = q + (rho2 * 2.0 - 1.0) * Phi - 1.0;
    for (int i = 0; i < 3; ++i) {
      /* tangential class (c) piece plus the radial compensator x^i Phi/<r> */
      S cperp = (r2 * e[i] - x[i] * xe) * Ac / br2;
      g[0][i + 1] = g[i + 1][0] = cperp + x[i] * Phi / br;
      for (int j = 0; j < 3; ++j) {
        S Eij = (Aa - Ab) * x[i] * x[j] / br2;
        if (i == j) Eij = Eij + Ab;
        g[i + 1][j + 1] = Eij;
        if (i == j) g[i + 1][j + 1] = g[i + 1][j + 1] + 1.0;
      }
    }
    return g;
  }
};

/* ----- custom radial table -----
 * f = 1 + w(r) with w interpolated by a natural cubic spline, gated to zero
 * near the origin, 1/r tail past the last knot. */

class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(std::vector<double> xs, std::vector<double> ys)
      : x_(std::move(xs)), y_(std::move(ys)) {
    const std::size_t n = x_.size();
    if (n < 3) throw std::invalid_argument("custom-table needs at least 3 knots");
    for (std::size_t i = 1; i < n; ++i)
      if (x_[i] <= x_[i - 1])
        throw std::invalid_argument("custom-table knots must be strictly increasing");
    /* natural spline second derivatives */
    std::vector<double> a(n, 0.0), b(n, 1.0), c(n, 0.0), r(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
      a[i] = h0 / 6.0;
      b[i] = (h0 + h1) / 3.0;
      c[i] = h1 / 6.0;
      r[i] = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
    }
    tridiag_solve(a, b, c, r, m_);
  }

  template <class S>
  S eval(const S& xq) const {
    double xv = vof(xq);
    std::size_t n = x_.size();
    if (xv <= x_.front()) return make_const<S>(y_.front());
    if (xv >= x_.back()) return make_const<S>(y_.back());
    std::size_t k = 1;
    while (k + 1 < n && x_[k] < xv) ++k;
    double h = x_[k] - x_[k - 1];
    S A = (make_const<S>(x_[k]) - xq) * (1.0 / h);
    S B = (xq - x_[k - 1]) * (1.0 / h);
    return A * y_[k - 1] + B * y_[k] +
           ((A * A * A - A) * m_[k - 1] + (B * B * B - B) * m_[k]) * (h * h / 6.0);
  }

  const std::vector<double>& knots() const { return x_; }
  const std::vector<double>& values() const { return y_; }

 private:
  std::vector<double> x_, y_;
  std::vector<double> m_;
};

class TableShift;  /* forward */

class CustomTableModel : public ModelT<CustomTableModel> {
 public:
  CustomTableModel(std::vector<double> rk, std::vector<double> wk,
                   const AsymptoticProfile& prof);

  template <class S>
  S wfun(const S& r) const {
    double rv = vof(r);
    S gate = rise(r, 0.5 * gate_r_, gate_r_);
    if (rv >= spline_.knots().back()) {
      double rl = spline_.knots().back(), wl = spline_.values().back();
      return make_const<S>(wl * rl) / r;
    }
    return gate * spline_.template eval<S>(r);
  }

  template <class S>
  M4<S> eval(const S&, const V3<S>& x) const {
    using std::sqrt;
    S r2 = dot3(x, x);
    if (vof(r2) <= 0.25 * gate_r_ * gate_r_) return minkowski_inv<S>();
    S r = sqrt(r2);
    S f = wfun(r) + 1.0;
    M4<S> g = zero4<S>();
    g[0][0] = -1.0 / f;
    S w = (f - 1.0) / r2;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        g[i + 1][j + 1] = w * x[i] * x[j];
        if (i == j) g[i + 1][j + 1] = g[i + 1][j + 1] + 1.0;
      }
    }
    return g;
  }

  const CubicSpline& spline() const { return spline_; }
  double gate_radius() const { return gate_r_; }

 private:
  CubicSpline spline_;
  double gate_r_ = 1.0;
};

class TableShift : public RadialFnT<TableShift> {
 public:
  explicit TableShift(const CustomTableModel* mdl) : m_(mdl) {
    /* cumulative integral of 1/f - 1 at the knots */
    const auto& xs = m_->spline().knots();
    cum_.assign(xs.size(), 0.0);
    for (std::size_t k = 1; k < xs.size(); ++k) {
      double seg = gl_integrate([this](double s) { return gd(s); }, xs[k - 1], xs[k],
                                gl16());
      cum_[k] = cum_[k - 1] + seg;
    }
  }

  template <class S>
  S eval(const S& r) const {
    const auto& xs = m_->spline().knots();
    double rv = vof(r);
    if (rv <= 0.5 * m_->gate_radius()) return make_const<S>(0.0);
    if (rv >= xs.back()) {
      /* w = a/r with a = w_last r_last: integral of 1/(1+a/s)-1 = -a/(s+a) */
      using std::log;
      double a = m_->spline().values().back() * xs.back();
      S tail = make_const<S>(0.0);
      if (std::fabs(a) > 1e-300)
        tail = (log(r + a) - std::log(xs.back() + a)) * (-a);
      return make_const<S>(cum_.back()) + tail;
    }
    std::size_t k = 1;
    while (k + 1 < xs.size() && xs[k] < rv) ++k;
    const GaussLegendre& g = gl16();
    S a = make_const<S>(xs[k - 1]);
    S h = (r - a) * 0.5, mid = (r + a) * 0.5;
    S acc = make_const<S>(cum_[k - 1]);
    for (std::size_t i = 0; i < g.x.size(); ++i) {
      S s = mid + h * g.x[i];
      acc = acc + gs(s) * (h * g.w[i]);
    }
    return acc;
  }

 private:
  double gd(double s) const { return 1.0 / (1.0 + vof(m_->template wfun<double>(s))) - 1.0; }
  template <class S>
  S gs(const S& s) const {
    return 1.0 / (m_->template wfun<S>(s) + 1.0) - 1.0;
  }
  const CustomTableModel* m_;
  std::vector<double> cum_;
};

inline CustomTableModel::CustomTableModel(std::vector<double> rk, std::vector<double> wk,
                                          const AsymptoticProfile& prof)
    : spline_(std::move(rk), std::move(wk)) {
  id = ModelId::custom_table;
  name = "custom-table";
  profile = prof;
  deriv_order = 2;
  const auto& xs = spline_.knots();
  const auto& ys = spline_.values();
  if (xs.front() != 0.0 || ys.front() != 0.0)
    throw std::invalid_argument("custom-table must start with knot (0, 0)");
  gate_r_ = xs.back() * 0.25;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (std::fabs(ys[i]) >= 0.6)
      throw std::invalid_argument("custom-table |w| must stay below 0.6");
    if (ys[i] != 0.0 && gate_r_ > xs[i]) gate_r_ = 0.5 * xs[i];
  }
  chart.C_tau = prof.C_tau;
  chart.shift = std::make_shared<TableShift>(this);
}

/* ----- factory + validation ----- */

struct ModelSpec {
  ModelId id = ModelId::minkowski;
  AsymptoticProfile profile;
  double mass = 1.0;
  std::vector<double> table_r, table_w;
};

inline void check_signature_samples(const MetricModel& m) {
  const double ts[] = {0.0, 1.0, 5.0, 20.0, 100.0, 1000.0};
  const double rs[] = {0.4, 1.0, 2.0, 3.5, 5.0, 10.0, 50.0, 300.0, 5000.0};
  const V3<double> dirs[] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1},
                             {0.6, 0.8, 0.0}, {-0.48, 0.6, 0.64}};
  for (double t : ts) {
    for (double r : rs) {
      for (const auto& d : dirs) {
        V3<double> x{r * d[0], r * d[1], r * d[2]};
        M4<double> g = m.inv0(t, x);
        double det = det4(g);
        bool ok = g[0][0] < 0.0 && det < 0.0;
        /* leading minors of the spatial block */
        double m1 = g[1][1];
        double m2 = g[1][1] * g[2][2] - g[1][2] * g[2][1];
        M3<double> sp;
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) sp[i][j] = g[i + 1][j + 1];
        ok = ok && m1 > 0.0 && m2 > 0.0 && det3(sp) > 0.0;
        if (ok) {
          M4<double> gdn = inv4(g);
          ok = -gdn[0][0] > 0.0;
        }
        if (!ok)
          throw std::invalid_argument(
              "amplitude breaks Lorentzian signature at (t,r)=(" + std::to_string(t) +
              "," + std::to_string(r) + ")");
      }
    }
  }
}

inline std::unique_ptr<MetricModel> make_model(const ModelSpec& spec) {
  const AsymptoticProfile& p = spec.profile;
  if (!(p.gamma > 0.0) || !(p.gamma < p.delta))
    throw std::invalid_argument(
        "model.gamma must satisfy 0 < gamma < delta (got gamma=" +
        std::to_string(p.gamma) + ", delta=" + std::to_string(p.delta) + ")");
  if (!(p.delta > 0.0))
    throw std::invalid_argument("model.delta must be positive");
  if (p.C_tau <= 1.0)
    throw std::invalid_argument("model.C_tau must exceed 1");

  std::unique_ptr<MetricModel> m;
  switch (spec.id) {
    case ModelId::minkowski:
      m = std::make_unique<MinkowskiModel>();
      break;
    case ModelId::schwarzschild_tail: {
      if (std::fabs(p.delta - 1.0) > 1e-12)
        throw std::invalid_argument("schwarzschild_tail requires model.delta = 1");
      /* amplitude scales the mass: the default 0.25 leaves spec.mass as is */
      double mass = spec.mass * (p.amplitude / 0.25);
      m = std::make_unique<SchwarzschildModel>(mass, p);
      break;
    }
    case ModelId::radiating:
      m = std::make_unique<RadiatingModel>(p);
      break;
    case ModelId::custom_table:
      m = std::make_unique<CustomTableModel>(spec.table_r, spec.table_w, p);
      break;
  }
  m->profile = p;
  m->chart.C_tau = p.C_tau;
  check_signature_samples(*m);
  return m;
}

}  // namespace rad

#endif
