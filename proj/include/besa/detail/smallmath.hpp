#pragma once

// Small fixed-size scalar/vector tools used by the per-face metric kernels.
// Dual<N> carries a value plus N first derivatives, so the same face kernel
// instantiated with double computes values and with Dual computes exact
// derivatives of the face quantities with respect to vertex positions.

#include <array>
#include <cmath>

namespace besa::detail {

template <int N>
struct Dual {
  double v = 0.0;
  std::array<double, N> d{};

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: implicit by design

  static Dual seeded(double value, int slot) {
    Dual r(value);
    r.d[slot] = 1.0;
    return r;
  }

  Dual operator-() const {
    Dual r(-v);
    for (int i = 0; i < N; ++i) r.d[i] = -d[i];
    return r;
  }
  Dual& operator+=(const Dual& o) {
    v += o.v;
    for (int i = 0; i < N; ++i) d[i] += o.d[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    for (int i = 0; i < N; ++i) d[i] -= o.d[i];
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    for (int i = 0; i < N; ++i) d[i] = d[i] * o.v + v * o.d[i];
    v *= o.v;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    const double inv = 1.0 / o.v;
    for (int i = 0; i < N; ++i) d[i] = (d[i] - v * inv * o.d[i]) * inv;
    v *= inv;
    return *this;
  }

  friend Dual operator+(Dual a, const Dual& b) { return a += b; }
  friend Dual operator-(Dual a, const Dual& b) { return a -= b; }
  friend Dual operator*(Dual a, const Dual& b) { return a *= b; }
  friend Dual operator/(Dual a, const Dual& b) { return a /= b; }
  friend bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
  friend bool operator>(const Dual& a, const Dual& b) { return a.v > b.v; }
  friend bool operator<=(const Dual& a, const Dual& b) { return a.v <= b.v; }
  friend bool operator>=(const Dual& a, const Dual& b) { return a.v >= b.v; }

  friend Dual sqrt(const Dual& a) {
    Dual r(std::sqrt(a.v));
    const double scale = 0.5 / r.v;
    for (int i = 0; i < N; ++i) r.d[i] = scale * a.d[i];
    return r;
  }
};

inline double value_of(double x) { return x; }
template <int N>
double value_of(const Dual<N>& x) {
  return x.v;
}

using std::sqrt;

template <class T>
struct TVec3 {
  T x{}, y{}, z{};

  friend TVec3 operator+(const TVec3& a, const TVec3& b) {
    return {a.x + b.x, a.y + b.y, a.z + b.z};
  }
  friend TVec3 operator-(const TVec3& a, const TVec3& b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
  }
  TVec3& operator+=(const TVec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
};

// Scalar times vector with type promotion (e.g. Dual * TVec3<double>).
template <class S, class T>
auto operator*(const S& s, const TVec3<T>& a)
    -> TVec3<decltype(s * a.x)> {
  return {s * a.x, s * a.y, s * a.z};
}

// dot(a, b) and dot(b, a) round identically: products commute and the
// additions run in the same order. The metric kernels rely on this for
// exact symmetry of the inner product.
template <class T, class S>
auto dot(const TVec3<T>& a, const TVec3<S>& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

template <class T>
TVec3<T> cross(const TVec3<T>& a, const TVec3<T>& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z,
          a.x * b.y - a.y * b.x};
}

// 2x2 matrix [[m00, m01], [m10, m11]].
template <class T>
struct TMat2 {
  T m00{}, m01{}, m10{}, m11{};

  T trace() const { return m00 + m11; }
  T det() const { return m00 * m11 - m01 * m10; }

  friend TMat2 operator+(const TMat2& a, const TMat2& b) {
    return {a.m00 + b.m00, a.m01 + b.m01, a.m10 + b.m10, a.m11 + b.m11};
  }
  friend TMat2 operator-(const TMat2& a, const TMat2& b) {
    return {a.m00 - b.m00, a.m01 - b.m01, a.m10 - b.m10, a.m11 - b.m11};
  }
  friend TMat2 operator*(const TMat2& a, const TMat2& b) {
    return {a.m00 * b.m00 + a.m01 * b.m10, a.m00 * b.m01 + a.m01 * b.m11,
            a.m10 * b.m00 + a.m11 * b.m10, a.m10 * b.m01 + a.m11 * b.m11};
  }
  template <class S>
  TMat2<T> scaled(const S& s) const {
    return {s * m00, s * m01, s * m10, s * m11};
  }
  TMat2 transposed() const { return {m00, m10, m01, m11}; }
};

// Inverse of a symmetric positive definite 2x2; near-singular inputs are
// handled by the caller via pinv_sym2.
template <class T>
TMat2<T> inverse_sym2(const TMat2<T>& g) {
  const T inv_det = T(1.0) / g.det();
  return {g.m11 * inv_det, -g.m01 * inv_det, -g.m10 * inv_det,
          g.m00 * inv_det};
}

// Eigenvalue-truncated pseudo-inverse of a symmetric PSD 2x2: eigenvalues
// below `cutoff` contribute nothing.
template <class T>
TMat2<T> pinv_sym2(const TMat2<T>& g, double cutoff) {
  const T half_tr = T(0.5) * (g.m00 + g.m11);
  const T diff = T(0.5) * (g.m00 - g.m11);
  const T disc = sqrt(diff * diff + g.m01 * g.m01);
  const T lam1 = half_tr + disc;  // lam1 >= lam2
  const T lam2 = half_tr - disc;
  TMat2<T> out{};
  // Eigenvector for lam1: pick the better-conditioned of the two columns
  // of (g - lam2 I).
  T e1x, e1y;
  const double c0 = value_of(g.m00 - lam2) * value_of(g.m00 - lam2) +
                    value_of(g.m01) * value_of(g.m01);
  const double c1 = value_of(g.m11 - lam2) * value_of(g.m11 - lam2) +
                    value_of(g.m01) * value_of(g.m01);
  if (c0 == 0.0 && c1 == 0.0) {
    // Multiple of the identity: any orthonormal pair works.
    e1x = T(1.0);
    e1y = T(0.0);
  } else if (c0 > c1) {
    e1x = g.m00 - lam2;
    e1y = g.m10;
  } else {
    e1x = g.m01;
    e1y = g.m11 - lam2;
  }
  const T n1 = e1x * e1x + e1y * e1y;
  if (value_of(lam1) > cutoff && value_of(n1) > 0.0) {
    const T s = T(1.0) / (lam1 * n1);
    out.m00 += s * e1x * e1x;
    out.m01 += s * e1x * e1y;
    out.m10 += s * e1y * e1x;
    out.m11 += s * e1y * e1y;
  }
  if (value_of(lam2) > cutoff) {
    // Second eigenvector is the orthogonal complement.
    const T e2x = -e1y, e2y = e1x;
    const T n2 = e2x * e2x + e2y * e2y;
    if (value_of(n2) > 0.0) {
      const T s = T(1.0) / (lam2 * n2);
      out.m00 += s * e2x * e2x;
      out.m01 += s * e2x * e2y;
      out.m10 += s * e2y * e2x;
      out.m11 += s * e2y * e2y;
    }
  }
  return out;
}

// Neumaier compensated accumulator: deterministic high-accuracy sums for
// the kernel double loops.
struct KahanSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  double get() const { return sum + comp; }
};

}  // namespace besa::detail
