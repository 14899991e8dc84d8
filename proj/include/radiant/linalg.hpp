#ifndef RADIANT_LINALG_HPP
#define RADIANT_LINALG_HPP

/* Small fixed-size linear algebra, templated on the scalar so the same code
 * runs on doubles and on jets. */

#include <array>
#include <cstddef>
#include <vector>

#include "jets.hpp"

namespace rad {

template <class S>
using V3 = std::array<S, 3>;
template <class S>
using V4 = std::array<S, 4>;
template <class S>
using M3 = std::array<std::array<S, 3>, 3>;
template <class S>
using M4 = std::array<std::array<S, 4>, 4>;

template <class S>
V3<S> v3(const S& a, const S& b, const S& c) {
  return {a, b, c};
}

template <class S>
S dot3(const V3<S>& a, const V3<S>& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

template <class S>
M4<S> zero4() {
  M4<S> m;
  for (auto& row : m)
    for (auto& e : row) e = make_const<S>(0.0);
  return m;
}

template <class S>
M4<S> minkowski_inv() {
  M4<S> m = zero4<S>();
  m[0][0] = make_const<S>(-1.0);
  for (int i = 1; i < 4; ++i) m[i][i] = make_const<S>(1.0);
  return m;
}

template <class S>
S det3(const M3<S>& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

template <class S>
S det4(const M4<S>& m) {
  S det = make_const<S>(0.0);
  for (int c = 0; c < 4; ++c) {
    M3<S> minor;
    for (int i = 1; i < 4; ++i) {
      int jj = 0;
      for (int j = 0; j < 4; ++j) {
        if (j == c) continue;
        minor[i - 1][jj++] = m[i][j];
      }
    }
    S term = m[0][c] * det3(minor);
    det = (c % 2 == 0) ? det + term : det - term;
  }
  return det;
}

/* adjugate-based inverse; fine for 4x4 and keeps everything jet-friendly */
template <class S>
M4<S> inv4(const M4<S>& m) {
  M4<S> inv;
  S det = det4(m);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      M3<S> minor;
      int ii = 0;
      for (int i = 0; i < 4; ++i) {
        if (i == r) continue;
        int jj = 0;
        for (int j = 0; j < 4; ++j) {
          if (j == c) continue;
          minor[ii][jj++] = m[i][j];
        }
        ++ii;
      }
      S cof = det3(minor);
      if ((r + c) % 2 == 1) cof = -cof;
      inv[c][r] = cof / det; /* transpose of cofactor matrix */
    }
  }
  return inv;
}

template <class S>
V4<S> mat4_vec(const M4<S>& m, const V4<S>& v) {
  V4<S> r;
  for (int i = 0; i < 4; ++i) {
    S s = make_const<S>(0.0);
    for (int j = 0; j < 4; ++j) s = s + m[i][j] * v[j];
    r[i] = s;
  }
  return r;
}

template <class S>
S quad_form(const M4<S>& m, const V4<S>& a, const V4<S>& b) {
  S s = make_const<S>(0.0);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) s = s + m[i][j] * a[i] * b[j];
  return s;
}

/* Dense Gaussian elimination with partial pivoting, doubles only.
 * Used by the least squares fits and small auxiliary systems. */
inline bool solve_dense(std::vector<std::vector<double>> a, std::vector<double> b,
                        std::vector<double>& x) {
  const std::size_t n = a.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::fabs(a[i][k]) > std::fabs(a[piv][k])) piv = i;
    if (std::fabs(a[piv][k]) < 1e-300) return false;
    std::swap(a[piv], a[k]);
    std::swap(b[piv], b[k]);
    for (std::size_t i = k + 1; i < n; ++i) {
      double f = a[i][k] / a[k][k];
      for (std::size_t j = k; j < n; ++j) a[i][j] -= f * a[k][j];
      b[i] -= f * b[k];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a[i][j] * x[j];
    x[i] = s / a[i][i];
  }
  return true;
}

}  // namespace rad

#endif
