#include "besa/metric.hpp"

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "besa/detail/smallmath.hpp"

namespace besa {
namespace {

using detail::Dual;
using detail::TMat2;
using detail::TVec3;
using detail::value_of;

// 3x2 matrix stored as two column vectors.
template <class T>
struct Cols32 {
  TVec3<T> c0, c1;
};

// Per-face frame: edge matrix columns, unit normal, area, first fundamental
// form and its (pseudo-)inverse.
template <class T>
struct Frame {
  TVec3<T> u, w, n;
  T cross_norm{}, area{};
  TMat2<T> g, ginv;
};

template <class T>
Frame<T> make_frame(const TVec3<T>& u, const TVec3<T>& w, int face) {
  Frame<T> fr;
  fr.u = u;
  fr.w = w;
  const TVec3<T> cr = detail::cross(u, w);
  fr.cross_norm = sqrt(detail::dot(cr, cr));
  fr.area = T(0.5) * fr.cross_norm;
  if (value_of(fr.area) <= kDegenerateArea)
    throw_error(ErrorKind::degenerate,
                "degenerate face " + std::to_string(face) + " (area " +
                    std::to_string(value_of(fr.area)) + ")");
  fr.n = (T(1.0) / fr.cross_norm) * cr;
  fr.g = TMat2<T>{detail::dot(u, u), detail::dot(u, w), detail::dot(w, u),
                  detail::dot(w, w)};
  if (value_of(fr.area) > kPinvArea)
    fr.ginv = detail::inverse_sym2(fr.g);
  else
    fr.ginv = detail::pinv_sym2(fr.g, kPinvEigenCutoff);
  return fr;
}

// dq * X for a 2x2 coefficient matrix X: columns X[0j] u + X[1j] w.
template <class T>
Cols32<T> frame_times(const Frame<T>& fr, const TMat2<T>& x) {
  return {x.m00 * fr.u + x.m10 * fr.w, x.m01 * fr.u + x.m11 * fr.w};
}

// The four components of the differential of a field on one face. With
// A = g^-1 dq^T dh and the transpose taken with respect to g (so that the
// decomposition is orthogonal under tr(g^-1 U^T V)):
//   stretch  = dq (tr A / 2) I
//   shear    = dq (self-adjoint traceless part of A)
//   residual = dq (skew part of A)
//   bend     = n (n^T dh)
template <class T>
struct FaceSplit {
  Cols32<T> shear, stretch, bend, residual;
};

template <class T>
FaceSplit<T> split_face(const Frame<T>& fr, const TVec3<double>& dh0,
                        const TVec3<double>& dh1) {
  const TMat2<T> m{detail::dot(fr.u, dh0), detail::dot(fr.u, dh1),
                   detail::dot(fr.w, dh0), detail::dot(fr.w, dh1)};
  const TMat2<T> a = fr.ginv * m;
  // g-adjoint of A: g^-1 A^T g. Self-adjoint/skew parts with respect to it
  // keep the four components g^-1-orthogonal.
  const TMat2<T> a_adj = fr.ginv * (a.transposed() * fr.g);
  const T half_tr = T(0.5) * a.trace();
  TMat2<T> sym0 = (a + a_adj).scaled(T(0.5));
  sym0.m00 -= half_tr;
  sym0.m11 -= half_tr;
  const TMat2<T> skew = (a - a_adj).scaled(T(0.5));
  const T b0 = detail::dot(fr.n, dh0);
  const T b1 = detail::dot(fr.n, dh1);
  FaceSplit<T> s;
  s.shear = frame_times(fr, sym0);
  s.stretch = {half_tr * fr.u, half_tr * fr.w};
  s.residual = frame_times(fr, skew);
  s.bend = {b0 * fr.n, b1 * fr.n};
  return s;
}

// tr(g^-1 U^T V). Exactly symmetric in U and V: every product commutes and
// the mixed term adds two bitwise-swappable dot products.
template <class T>
T form_pairing(const TMat2<T>& ginv, const Cols32<T>& u, const Cols32<T>& v) {
  return ginv.m00 * detail::dot(u.c0, v.c0) +
         ginv.m11 * detail::dot(u.c1, v.c1) +
         ginv.m01 * (detail::dot(u.c1, v.c0) + detail::dot(u.c0, v.c1));
}

// Weighted first-order face contribution a_f * sum of the four pairings.
template <class T>
T first_order_face(const Frame<T>& fr, const FaceSplit<T>& sh,
                   const FaceSplit<T>& sk, const MetricParams& p) {
  T acc(0.0);
  if (p.a1 != 0.0) acc += T(p.a1) * form_pairing(fr.ginv, sh.shear, sk.shear);
  if (p.b1 != 0.0)
    acc += T(p.b1) * form_pairing(fr.ginv, sh.stretch, sk.stretch);
  if (p.c1 != 0.0) acc += T(p.c1) * form_pairing(fr.ginv, sh.bend, sk.bend);
  if (p.d1 != 0.0)
    acc += T(p.d1) * form_pairing(fr.ginv, sh.residual, sk.residual);
  return fr.area * acc;
}

TVec3<double> row3(const Field& m, int r) {
  return {m(r, 0), m(r, 1), m(r, 2)};
}

void check_field(const TriMesh& mesh, const Field& field, const char* name) {
  if (field.rows() != mesh.vertices.rows())
    throw_error(ErrorKind::invalid,
                std::string(name) + " has " + std::to_string(field.rows()) +
                    " rows but mesh has " +
                    std::to_string(mesh.vertex_count()) + " vertices");
}

bool has_first_order(const MetricParams& p) {
  return p.a1 != 0.0 || p.b1 != 0.0 || p.c1 != 0.0 || p.d1 != 0.0;
}

// Differences h1 - h0, h2 - h0 for face f of a double field.
void face_diffs(const TriMesh& mesh, const Field& h, int f,
                TVec3<double>& dh0, TVec3<double>& dh1) {
  const int i0 = mesh.faces(f, 0);
  const int i1 = mesh.faces(f, 1);
  const int i2 = mesh.faces(f, 2);
  dh0 = {h(i1, 0) - h(i0, 0), h(i1, 1) - h(i0, 1), h(i1, 2) - h(i0, 2)};
  dh1 = {h(i2, 0) - h(i0, 0), h(i2, 1) - h(i0, 1), h(i2, 2) - h(i0, 2)};
}

Frame<double> face_frame(const TriMesh& mesh, int f) {
  const int i0 = mesh.faces(f, 0);
  const int i1 = mesh.faces(f, 1);
  const int i2 = mesh.faces(f, 2);
  const TVec3<double> u{mesh.vertices(i1, 0) - mesh.vertices(i0, 0),
                        mesh.vertices(i1, 1) - mesh.vertices(i0, 1),
                        mesh.vertices(i1, 2) - mesh.vertices(i0, 2)};
  const TVec3<double> w{mesh.vertices(i2, 0) - mesh.vertices(i0, 0),
                        mesh.vertices(i2, 1) - mesh.vertices(i0, 1),
                        mesh.vertices(i2, 2) - mesh.vertices(i0, 2)};
  return make_frame(u, w, f);
}

// Gradient of one face's energy contribution with respect to the two edge
// vectors u = p1 - p0, w = p2 - p0.
struct EdgeGrad {
  TVec3<double> du{}, dw{};
};

// Scalars of one field's differential on a face, expressed in the edge
// basis: M = dq^T dh, the cross-product dots t = (u x w) . dh, and the
// derived split coefficients. With A = g^-1 M the g-adjoint of A is
// g^-1 M^T, so the split components are A's trace part (htr), skew
// coefficient q, and the symmetric traceless matrix g^-1 Sigma with
// Sigma = sym(M) - htr g.
struct FieldScalars {
  double m00, m01, m10, m11, t0, t1, htr, q, s00, s01, s11;
};

FieldScalars field_scalars(const TVec3<double>& u, const TVec3<double>& w,
                           const TVec3<double>& cr, const TVec3<double>& d0,
                           const TVec3<double>& d1, double ia, double ib,
                           double ic, double gp, double gq, double gr) {
  FieldScalars s;
  s.m00 = detail::dot(u, d0);
  s.m01 = detail::dot(u, d1);
  s.m10 = detail::dot(w, d0);
  s.m11 = detail::dot(w, d1);
  s.t0 = detail::dot(cr, d0);
  s.t1 = detail::dot(cr, d1);
  s.htr = 0.5 * (ia * s.m00 + ib * (s.m01 + s.m10) + ic * s.m11);
  s.q = 0.5 * (s.m01 - s.m10);
  s.s00 = s.m00 - s.htr * gp;
  s.s01 = 0.5 * (s.m01 + s.m10) - s.htr * gq;
  s.s11 = s.m11 - s.htr * gr;
  return s;
}

// Adjoints of one field's edge-dependent scalars.
struct FieldAdjoint {
  double m00 = 0, m01 = 0, m10 = 0, m11 = 0, t0 = 0, t1 = 0;
};

// Hand-written reverse sweep for the per-face energy
//   s = area * (a1 shear + b1 stretch + c1 bend + d1 residual)
//       + sum_i g_cot[i] cot_i + g_area * area.
// The face energy depends on (u, w) only through the Gram entries
// P = u.u, Q = u.w, R = w.w, the cross product and its norm, and the
// edge/field dots, so accumulating those adjoints analytically replaces
// the dual-number pass. In the edge basis the split pairings reduce to
//   shear    = tr(ginv Sigma_h ginv Sigma_k)
//   stretch  = 2 htr_h htr_k
//   bend     = (t_k^T ginv t_h) / cn^2
//   residual = 2 q_h q_k / det(g),
// arranged so swapping the two fields reproduces the same bits. Requires
// the plain-inverse regime (area > kPinvArea).
EdgeGrad reverse_edge_grad(const TVec3<double>& u, const TVec3<double>& w,
                           const TVec3<double>& cr, double cn, double area,
                           const TVec3<double>& dh0, const TVec3<double>& dh1,
                           const TVec3<double>& dk0, const TVec3<double>& dk1,
                           bool same, const MetricParams& p, bool first,
                           bool second, double g_area,
                           const std::array<double, 3>& g_cot) {
  const double gp = detail::dot(u, u);
  const double gq = detail::dot(u, w);
  const double gr = detail::dot(w, w);
  const double inv_cn = 1.0 / cn;

  double det = 0, inv_det = 0, ia = 0, ib = 0, ic = 0;
  FieldScalars fh{}, fk{};
  double vh00 = 0, vh01 = 0, vh10 = 0, vh11 = 0;
  double vk00 = 0, vk01 = 0, vk10 = 0, vk11 = 0;
  double shear = 0, bend = 0, resid = 0, beta = 0, first_term = 0;
  if (first) {
    det = gp * gr - gq * gq;
    inv_det = 1.0 / det;
    ia = gr * inv_det;
    ib = -gq * inv_det;
    ic = gp * inv_det;
    fh = field_scalars(u, w, cr, dh0, dh1, ia, ib, ic, gp, gq, gr);
    fk = same ? fh : field_scalars(u, w, cr, dk0, dk1, ia, ib, ic, gp, gq, gr);
    vh00 = ia * fh.s00 + ib * fh.s01;
    vh01 = ia * fh.s01 + ib * fh.s11;
    vh10 = ib * fh.s00 + ic * fh.s01;
    vh11 = ib * fh.s01 + ic * fh.s11;
    if (same) {
      vk00 = vh00;
      vk01 = vh01;
      vk10 = vh10;
      vk11 = vh11;
    } else {
      vk00 = ia * fk.s00 + ib * fk.s01;
      vk01 = ia * fk.s01 + ib * fk.s11;
      vk10 = ib * fk.s00 + ic * fk.s01;
      vk11 = ib * fk.s01 + ic * fk.s11;
    }
    shear = vh00 * vk00 + (vh01 * vk10 + vh10 * vk01) + vh11 * vk11;
    const double stretch = 2.0 * fh.htr * fk.htr;
    beta = ia * fh.t0 * fk.t0 + ib * (fh.t0 * fk.t1 + fh.t1 * fk.t0) +
           ic * fh.t1 * fk.t1;
    bend = beta * (inv_cn * inv_cn);
    resid = 2.0 * fh.q * fk.q * inv_det;
    first_term = p.a1 * shear + p.b1 * stretch + p.c1 * bend + p.d1 * resid;
  }

  // Reverse sweep, top down. Adjoint of x is written x_b.
  const double first_b = area;
  const double area_b = first_term + g_area;
  double cn_b = 0.5 * area_b;
  double gp_b = 0, gq_b = 0, gr_b = 0;
  if (second) {
    const double cot0 = gq * inv_cn;
    const double cot1 = (gp - gq) * inv_cn;
    const double cot2 = (gr - gq) * inv_cn;
    gq_b += (g_cot[0] - g_cot[1] - g_cot[2]) * inv_cn;
    gp_b += g_cot[1] * inv_cn;
    gr_b += g_cot[2] * inv_cn;
    cn_b -= (g_cot[0] * cot0 + g_cot[1] * cot1 + g_cot[2] * cot2) * inv_cn;
  }

  FieldAdjoint ah, ak;
  if (first) {
    const double shear_b = p.a1 * first_b;
    const double stretch_b = p.b1 * first_b;
    const double bend_b = p.c1 * first_b;
    const double resid_b = p.d1 * first_b;
    double det_b = 0, ia_b = 0, ib_b = 0, ic_b = 0;
    double htrh_b = 2.0 * stretch_b * fk.htr;
    double htrk_b = 2.0 * stretch_b * fh.htr;
    const double qh_b = 2.0 * resid_b * fk.q * inv_det;
    const double qk_b = 2.0 * resid_b * fh.q * inv_det;
    det_b -= resid * resid_b * inv_det;
    const double beta_b = bend_b * (inv_cn * inv_cn);
    cn_b -= 2.0 * bend * bend_b * inv_cn;
    ia_b += beta_b * fh.t0 * fk.t0;
    ib_b += beta_b * (fh.t0 * fk.t1 + fh.t1 * fk.t0);
    ic_b += beta_b * fh.t1 * fk.t1;
    ah.t0 = beta_b * (ia * fk.t0 + ib * fk.t1);
    ah.t1 = beta_b * (ib * fk.t0 + ic * fk.t1);
    ak.t0 = beta_b * (ia * fh.t0 + ib * fh.t1);
    ak.t1 = beta_b * (ib * fh.t0 + ic * fh.t1);
    const double vh00_b = shear_b * vk00, vh01_b = shear_b * vk10;
    const double vh10_b = shear_b * vk01, vh11_b = shear_b * vk11;
    const double vk00_b = shear_b * vh00, vk01_b = shear_b * vh10;
    const double vk10_b = shear_b * vh01, vk11_b = shear_b * vh11;
    const double s00h_b = ia * vh00_b + ib * vh10_b;
    const double s01h_b = ib * vh00_b + ia * vh01_b + ic * vh10_b +
                          ib * vh11_b;
    const double s11h_b = ib * vh01_b + ic * vh11_b;
    const double s00k_b = ia * vk00_b + ib * vk10_b;
    const double s01k_b = ib * vk00_b + ia * vk01_b + ic * vk10_b +
                          ib * vk11_b;
    const double s11k_b = ib * vk01_b + ic * vk11_b;
    ia_b += vh00_b * fh.s00 + vh01_b * fh.s01 + vk00_b * fk.s00 +
            vk01_b * fk.s01;
    ib_b += vh00_b * fh.s01 + vh01_b * fh.s11 + vh10_b * fh.s00 +
            vh11_b * fh.s01 + vk00_b * fk.s01 + vk01_b * fk.s11 +
            vk10_b * fk.s00 + vk11_b * fk.s01;
    ic_b += vh10_b * fh.s01 + vh11_b * fh.s11 + vk10_b * fk.s01 +
            vk11_b * fk.s11;
    // Sigma components s00 = m00 - htr P, s01 = (m01+m10)/2 - htr Q,
    // s11 = m11 - htr R.
    ah.m00 += s00h_b;
    gp_b -= s00h_b * fh.htr;
    htrh_b -= s00h_b * gp;
    ah.m01 += 0.5 * s01h_b;
    ah.m10 += 0.5 * s01h_b;
    gq_b -= s01h_b * fh.htr;
    htrh_b -= s01h_b * gq;
    ah.m11 += s11h_b;
    gr_b -= s11h_b * fh.htr;
    htrh_b -= s11h_b * gr;
    ak.m00 += s00k_b;
    gp_b -= s00k_b * fk.htr;
    htrk_b -= s00k_b * gp;
    ak.m01 += 0.5 * s01k_b;
    ak.m10 += 0.5 * s01k_b;
    gq_b -= s01k_b * fk.htr;
    htrk_b -= s01k_b * gq;
    ak.m11 += s11k_b;
    gr_b -= s11k_b * fk.htr;
    htrk_b -= s11k_b * gr;
    // q = (m01 - m10)/2.
    ah.m01 += 0.5 * qh_b;
    ah.m10 -= 0.5 * qh_b;
    ak.m01 += 0.5 * qk_b;
    ak.m10 -= 0.5 * qk_b;
    // htr = (ia m00 + ib (m01 + m10) + ic m11)/2.
    ia_b += 0.5 * (htrh_b * fh.m00 + htrk_b * fk.m00);
    ib_b += 0.5 * (htrh_b * (fh.m01 + fh.m10) + htrk_b * (fk.m01 + fk.m10));
    ic_b += 0.5 * (htrh_b * fh.m11 + htrk_b * fk.m11);
    ah.m00 += 0.5 * htrh_b * ia;
    ah.m01 += 0.5 * htrh_b * ib;
    ah.m10 += 0.5 * htrh_b * ib;
    ah.m11 += 0.5 * htrh_b * ic;
    ak.m00 += 0.5 * htrk_b * ia;
    ak.m01 += 0.5 * htrk_b * ib;
    ak.m10 += 0.5 * htrk_b * ib;
    ak.m11 += 0.5 * htrk_b * ic;
    // ginv entries ia = R/det, ib = -Q/det, ic = P/det.
    gr_b += ia_b * inv_det;
    gq_b -= ib_b * inv_det;
    gp_b += ic_b * inv_det;
    det_b -= (ia_b * ia + ib_b * ib + ic_b * ic) * inv_det;
    // det = P R - Q^2.
    gp_b += det_b * gr;
    gr_b += det_b * gp;
    gq_b -= 2.0 * det_b * gq;
  }

  // cn = sqrt(cr . cr), then cr = u x w and the remaining dots.
  const double n2_b = 0.5 * cn_b * inv_cn;
  TVec3<double> cr_b = (2.0 * n2_b) * cr;
  EdgeGrad out;
  if (first) {
    cr_b += ah.t0 * dh0;
    cr_b += ah.t1 * dh1;
    cr_b += ak.t0 * dk0;
    cr_b += ak.t1 * dk1;
  }
  out.du = detail::cross(w, cr_b);
  out.dw = detail::cross(cr_b, u);
  if (first) {
    out.du += ah.m00 * dh0;
    out.du += ah.m01 * dh1;
    out.du += ak.m00 * dk0;
    out.du += ak.m01 * dk1;
    out.dw += ah.m10 * dh0;
    out.dw += ah.m11 * dh1;
    out.dw += ak.m10 * dk0;
    out.dw += ak.m11 * dk1;
  }
  out.du += (2.0 * gp_b) * u;
  out.du += gq_b * w;
  out.dw += gq_b * u;
  out.dw += (2.0 * gr_b) * w;
  return out;
}

// Dual-number fallback for faces in the pseudo-inverse regime, where the
// truncated eigendecomposition inside make_frame is not covered by the
// scalar reverse sweep.
EdgeGrad dual_edge_grad(const TVec3<double>& u0, const TVec3<double>& w0,
                        const TVec3<double>& dh0, const TVec3<double>& dh1,
                        const TVec3<double>& dk0, const TVec3<double>& dk1,
                        const MetricParams& p, bool first, bool second,
                        double g_area, const std::array<double, 3>& g_cot,
                        int f) {
  using D = Dual<6>;
  TVec3<D> u, w;
  u.x = D::seeded(u0.x, 0);
  u.y = D::seeded(u0.y, 1);
  u.z = D::seeded(u0.z, 2);
  w.x = D::seeded(w0.x, 3);
  w.y = D::seeded(w0.y, 4);
  w.z = D::seeded(w0.z, 5);
  const Frame<D> fr = make_frame(u, w, f);
  D s(0.0);
  if (first) {
    const FaceSplit<D> sh = split_face(fr, dh0, dh1);
    const FaceSplit<D> sk = split_face(fr, dk0, dk1);
    s += first_order_face(fr, sh, sk, p);
  }
  if (second) {
    const D c0 = detail::dot(fr.u, fr.w) / fr.cross_norm;
    const D c1 =
        (detail::dot(fr.u, fr.u) - detail::dot(fr.u, fr.w)) / fr.cross_norm;
    const D c2 =
        (detail::dot(fr.w, fr.w) - detail::dot(fr.u, fr.w)) / fr.cross_norm;
    s += D(g_cot[0]) * c0 + D(g_cot[1]) * c1 + D(g_cot[2]) * c2;
  }
  if (g_area != 0.0) s += D(g_area) * fr.area;
  EdgeGrad out;
  out.du = {s.d[0], s.d[1], s.d[2]};
  out.dw = {s.d[3], s.d[4], s.d[5]};
  return out;
}

}  // namespace

void validate_params(const MetricParams& p) {
  const std::array<double, 6> c{p.a0, p.a1, p.b1, p.c1, p.d1, p.a2};
  double sum = 0.0;
  for (double x : c) {
    if (!(x >= 0.0))
      throw_error(ErrorKind::invalid,
                  "metric coefficients must be nonnegative finite");
    sum += x;
  }
  if (sum == 0.0)
    throw_error(ErrorKind::invalid,
                "at least one metric coefficient must be positive");
}

MeshOperators mesh_operators(const TriMesh& mesh) {
  MeshOperators ops;
  ops.faces = face_geometry(mesh);
  ops.cotangents = corner_cotangents(mesh);
  ops.masses = Eigen::VectorXd::Zero(mesh.vertex_count());
  for (int f = 0; f < mesh.face_count(); ++f) {
    const double third = ops.faces.areas(f) / 3.0;
    for (int c = 0; c < 3; ++c) ops.masses(mesh.faces(f, c)) += third;
  }
  return ops;
}

SplitDifferential split_differential(const TriMesh& mesh, const Field& h) {
  check_field(mesh, h, "field");
  const int nf = mesh.face_count();
  SplitDifferential out;
  out.shear.resize(nf);
  out.stretch.resize(nf);
  out.bend.resize(nf);
  out.residual.resize(nf);
  for (int f = 0; f < nf; ++f) {
    const Frame<double> fr = face_frame(mesh, f);
    TVec3<double> dh0, dh1;
    face_diffs(mesh, h, f, dh0, dh1);
    const FaceSplit<double> s = split_face(fr, dh0, dh1);
    auto to_eigen = [](const Cols32<double>& c) {
      Eigen::Matrix<double, 3, 2> m;
      m << c.c0.x, c.c1.x, c.c0.y, c.c1.y, c.c0.z, c.c1.z;
      return m;
    };
    out.shear[f] = to_eigen(s.shear);
    out.stretch[f] = to_eigen(s.stretch);
    out.bend[f] = to_eigen(s.bend);
    out.residual[f] = to_eigen(s.residual);
  }
  return out;
}

double h2_inner(const TriMesh& mesh, const MeshOperators& ops, const Field& h,
                const Field& k, const MetricParams& p) {
  validate_params(p);
  check_field(mesh, h, "first field");
  check_field(mesh, k, "second field");
  const int nv = mesh.vertex_count();
  double total = 0.0;
  if (p.a0 != 0.0) {
    double t0 = 0.0;
    for (int v = 0; v < nv; ++v)
      t0 += ops.masses(v) * h.row(v).dot(k.row(v));
    total += p.a0 * t0;
  }
  const bool same = &h == &k;
  if (has_first_order(p)) {
    for (int f = 0; f < mesh.face_count(); ++f) {
      const Frame<double> fr = face_frame(mesh, f);
      TVec3<double> dh0, dh1, dk0, dk1;
      face_diffs(mesh, h, f, dh0, dh1);
      const FaceSplit<double> sh = split_face(fr, dh0, dh1);
      if (same) {
        total += first_order_face(fr, sh, sh, p);
      } else {
        face_diffs(mesh, k, f, dk0, dk1);
        const FaceSplit<double> sk = split_face(fr, dk0, dk1);
        total += first_order_face(fr, sh, sk, p);
      }
    }
  }
  if (p.a2 != 0.0) {
    const Field ph = cotan_matrix_apply(mesh, ops.cotangents, h);
    const Field qk = same ? ph : cotan_matrix_apply(mesh, ops.cotangents, k);
    double t2 = 0.0;
    for (int v = 0; v < nv; ++v) {
      if (ops.masses(v) > 0.0)
        t2 += ph.row(v).dot(qk.row(v)) / ops.masses(v);
    }
    total += p.a2 * t2;
  }
  return total;
}

double h2_inner(const TriMesh& mesh, const Field& h, const Field& k,
                const MetricParams& p) {
  return h2_inner(mesh, mesh_operators(mesh), h, k, p);
}

Field h2_apply(const TriMesh& mesh, const MeshOperators& ops, const Field& h,
               const MetricParams& p) {
  validate_params(p);
  check_field(mesh, h, "field");
  const int nv = mesh.vertex_count();
  Field out = Field::Zero(nv, 3);
  if (p.a0 != 0.0) {
    for (int v = 0; v < nv; ++v)
      out.row(v) += p.a0 * ops.masses(v) * h.row(v);
  }
  if (has_first_order(p)) {
    for (int f = 0; f < mesh.face_count(); ++f) {
      const Frame<double> fr = face_frame(mesh, f);
      TVec3<double> dh0, dh1;
      face_diffs(mesh, h, f, dh0, dh1);
      const FaceSplit<double> s = split_face(fr, dh0, dh1);
      // Weighted sum C of the components, then W = a_f C g^-1; pairing
      // against dk = [k1-k0, k2-k0] scatters W's columns.
      Cols32<double> c{{0, 0, 0}, {0, 0, 0}};
      auto add = [&c](double wgt, const Cols32<double>& part) {
        if (wgt != 0.0) {
          c.c0 += wgt * part.c0;
          c.c1 += wgt * part.c1;
        }
      };
      add(p.a1, s.shear);
      add(p.b1, s.stretch);
      add(p.c1, s.bend);
      add(p.d1, s.residual);
      const TVec3<double> w0 =
          fr.area * (fr.ginv.m00 * c.c0 + fr.ginv.m10 * c.c1);
      const TVec3<double> w1 =
          fr.area * (fr.ginv.m01 * c.c0 + fr.ginv.m11 * c.c1);
      const int i0 = mesh.faces(f, 0);
      const int i1 = mesh.faces(f, 1);
      const int i2 = mesh.faces(f, 2);
      out(i1, 0) += w0.x;
      out(i1, 1) += w0.y;
      out(i1, 2) += w0.z;
      out(i2, 0) += w1.x;
      out(i2, 1) += w1.y;
      out(i2, 2) += w1.z;
      out(i0, 0) -= w0.x + w1.x;
      out(i0, 1) -= w0.y + w1.y;
      out(i0, 2) -= w0.z + w1.z;
    }
  }
  if (p.a2 != 0.0) {
    Field r = cotan_matrix_apply(mesh, ops.cotangents, h);
    for (int v = 0; v < nv; ++v) {
      if (ops.masses(v) > 0.0)
        r.row(v) /= ops.masses(v);
      else
        r.row(v).setZero();
    }
    out += p.a2 * cotan_matrix_apply(mesh, ops.cotangents, r);
  }
  return out;
}

Field h2_apply(const TriMesh& mesh, const Field& h, const MetricParams& p) {
  return h2_apply(mesh, mesh_operators(mesh), h, p);
}

Field h2_apply_directional(const TriMesh& mesh, const Field& dir,
                           const Field& h, const MetricParams& p) {
  validate_params(p);
  check_field(mesh, dir, "direction");
  check_field(mesh, h, "field");
  using D = Dual<1>;
  const int nv = mesh.vertex_count();
  const int nf = mesh.face_count();
  std::vector<TVec3<D>> out(nv);
  std::vector<D> masses(nv, D(0.0));
  std::vector<std::array<D, 3>> cots;
  std::vector<TVec3<D>> ph;
  const bool second = p.a2 != 0.0;
  if (second) {
    cots.resize(nf);
    ph.assign(nv, TVec3<D>{});
  }
  auto dual_pos = [&](int v) {
    TVec3<D> r;
    r.x = D(mesh.vertices(v, 0));
    r.x.d[0] = dir(v, 0);
    r.y = D(mesh.vertices(v, 1));
    r.y.d[0] = dir(v, 1);
    r.z = D(mesh.vertices(v, 2));
    r.z.d[0] = dir(v, 2);
    return r;
  };
  for (int f = 0; f < nf; ++f) {
    const int i0 = mesh.faces(f, 0);
    const int i1 = mesh.faces(f, 1);
    const int i2 = mesh.faces(f, 2);
    const TVec3<D> p0 = dual_pos(i0);
    const TVec3<D> p1 = dual_pos(i1);
    const TVec3<D> p2 = dual_pos(i2);
    const Frame<D> fr = make_frame(p1 - p0, p2 - p0, f);
    const D third = D(1.0 / 3.0) * fr.area;
    masses[i0] += third;
    masses[i1] += third;
    masses[i2] += third;
    if (second) {
      cots[f][0] = detail::dot(fr.u, fr.w) / fr.cross_norm;
      cots[f][1] = (detail::dot(fr.u, fr.u) - detail::dot(fr.u, fr.w)) /
                   fr.cross_norm;
      cots[f][2] = (detail::dot(fr.w, fr.w) - detail::dot(fr.u, fr.w)) /
                   fr.cross_norm;
      for (int c = 0; c < 3; ++c) {
        const int a = mesh.faces(f, (c + 1) % 3);
        const int b = mesh.faces(f, (c + 2) % 3);
        const TVec3<double> hd{h(b, 0) - h(a, 0), h(b, 1) - h(a, 1),
                               h(b, 2) - h(a, 2)};
        const TVec3<D> diff = (D(0.5) * cots[f][c]) * hd;
        ph[a] += diff;
        ph[b] += D(-1.0) * diff;
      }
    }
    if (has_first_order(p)) {
      TVec3<double> dh0, dh1;
      face_diffs(mesh, h, f, dh0, dh1);
      const FaceSplit<D> s = split_face(fr, dh0, dh1);
      Cols32<D> c{};
      auto add = [&c](double wgt, const Cols32<D>& part) {
        if (wgt != 0.0) {
          c.c0 += D(wgt) * part.c0;
          c.c1 += D(wgt) * part.c1;
        }
      };
      add(p.a1, s.shear);
      add(p.b1, s.stretch);
      add(p.c1, s.bend);
      add(p.d1, s.residual);
      const TVec3<D> w0 = fr.area * (fr.ginv.m00 * c.c0 + fr.ginv.m10 * c.c1);
      const TVec3<D> w1 = fr.area * (fr.ginv.m01 * c.c0 + fr.ginv.m11 * c.c1);
      out[i1] += w0;
      out[i2] += w1;
      out[i0] += D(-1.0) * (w0 + w1);
    }
  }
  if (p.a0 != 0.0) {
    for (int v = 0; v < nv; ++v) {
      const TVec3<double> hv = row3(h, v);
      out[v] += (D(p.a0) * masses[v]) * hv;
    }
  }
  if (second) {
    std::vector<TVec3<D>> r(nv);
    for (int v = 0; v < nv; ++v) {
      if (value_of(masses[v]) > 0.0)
        r[v] = (D(1.0) / masses[v]) * ph[v];
      else
        r[v] = TVec3<D>{};
    }
    for (int f = 0; f < nf; ++f) {
      for (int c = 0; c < 3; ++c) {
        const int a = mesh.faces(f, (c + 1) % 3);
        const int b = mesh.faces(f, (c + 2) % 3);
        const TVec3<D> diff =
            (D(p.a2) * D(0.5) * cots[f][c]) * (r[b] - r[a]);
        out[a] += diff;
        out[b] += D(-1.0) * diff;
      }
    }
  }
  Field deriv(nv, 3);
  for (int v = 0; v < nv; ++v) {
    deriv(v, 0) = out[v].x.d[0];
    deriv(v, 1) = out[v].y.d[0];
    deriv(v, 2) = out[v].z.d[0];
  }
  return deriv;
}

Field h2_vertex_grad(const TriMesh& mesh, const MeshOperators& ops,
                     const Field& h, const Field& k,
                     const MetricParams& p) {
  validate_params(p);
  check_field(mesh, h, "first field");
  check_field(mesh, k, "second field");
  const int nv = mesh.vertex_count();
  const int nf = mesh.face_count();
  const bool first = has_first_order(p);
  const bool second = p.a2 != 0.0;
  const bool same = &h == &k;

  // Adjoints of the scalar value with respect to vertex masses and
  // cotangent weights, accumulated from the zeroth- and second-order terms.
  Eigen::VectorXd g_mass = Eigen::VectorXd::Zero(nv);
  Field r_adj, s_adj;  // a2 * (L k)/M and a2 * (L h)/M
  Field lh, lk;
  if (p.a0 != 0.0) {
    for (int v = 0; v < nv; ++v)
      g_mass(v) += p.a0 * h.row(v).dot(k.row(v));
  }
  if (second) {
    lh = cotan_matrix_apply(mesh, ops.cotangents, h);
    lk = same ? lh : cotan_matrix_apply(mesh, ops.cotangents, k);
    r_adj = Field::Zero(nv, 3);
    s_adj = Field::Zero(nv, 3);
    for (int v = 0; v < nv; ++v) {
      const double m = ops.masses(v);
      if (m > 0.0) {
        g_mass(v) -= p.a2 * lh.row(v).dot(lk.row(v)) / (m * m);
        r_adj.row(v) = p.a2 / m * lk.row(v);
        s_adj.row(v) = p.a2 / m * lh.row(v);
      }
    }
  }

  Field out = Field::Zero(nv, 3);
  for (int f = 0; f < nf; ++f) {
    const int i0 = mesh.faces(f, 0);
    const int i1 = mesh.faces(f, 1);
    const int i2 = mesh.faces(f, 2);
    const double g_area =
        (g_mass(i0) + g_mass(i1) + g_mass(i2)) / 3.0;
    std::array<double, 3> g_cot{0.0, 0.0, 0.0};
    if (second) {
      for (int c = 0; c < 3; ++c) {
        const int a = mesh.faces(f, (c + 1) % 3);
        const int b = mesh.faces(f, (c + 2) % 3);
        g_cot[c] =
            0.5 * ((r_adj.row(a) - r_adj.row(b)).dot(h.row(b) - h.row(a)) +
                   (s_adj.row(a) - s_adj.row(b)).dot(k.row(b) - k.row(a)));
      }
    }
    if (!first && g_area == 0.0 && g_cot[0] == 0.0 && g_cot[1] == 0.0 &&
        g_cot[2] == 0.0)
      continue;
    const TVec3<double> u{mesh.vertices(i1, 0) - mesh.vertices(i0, 0),
                          mesh.vertices(i1, 1) - mesh.vertices(i0, 1),
                          mesh.vertices(i1, 2) - mesh.vertices(i0, 2)};
    const TVec3<double> w{mesh.vertices(i2, 0) - mesh.vertices(i0, 0),
                          mesh.vertices(i2, 1) - mesh.vertices(i0, 1),
                          mesh.vertices(i2, 2) - mesh.vertices(i0, 2)};
    TVec3<double> dh0{}, dh1{}, dk0{}, dk1{};
    if (first) {
      face_diffs(mesh, h, f, dh0, dh1);
      if (same) {
        dk0 = dh0;
        dk1 = dh1;
      } else {
        face_diffs(mesh, k, f, dk0, dk1);
      }
    }
    const TVec3<double> cr = detail::cross(u, w);
    const double cn = std::sqrt(detail::dot(cr, cr));
    const double area = 0.5 * cn;
    if (area <= kDegenerateArea)
      throw_error(ErrorKind::degenerate,
                  "degenerate face " + std::to_string(f) + " (area " +
                      std::to_string(area) + ")");
    const EdgeGrad eg =
        area > kPinvArea
            ? reverse_edge_grad(u, w, cr, cn, area, dh0, dh1, dk0, dk1, same,
                                p, first, second, g_area, g_cot)
            : dual_edge_grad(u, w, dh0, dh1, dk0, dk1, p, first, second,
                             g_area, g_cot, f);
    out(i1, 0) += eg.du.x;
    out(i1, 1) += eg.du.y;
    out(i1, 2) += eg.du.z;
    out(i2, 0) += eg.dw.x;
    out(i2, 1) += eg.dw.y;
    out(i2, 2) += eg.dw.z;
    out(i0, 0) -= eg.du.x + eg.dw.x;
    out(i0, 1) -= eg.du.y + eg.dw.y;
    out(i0, 2) -= eg.du.z + eg.dw.z;
  }
  return out;
}

Field h2_vertex_grad(const TriMesh& mesh, const Field& h, const Field& k,
                     const MetricParams& p) {
  return h2_vertex_grad(mesh, mesh_operators(mesh), h, k, p);
}

Eigen::VectorXd h2_inner_footpoint_grad(const FaceMatrix& faces,
                                        const ParameterizedMesh& mesh_fn,
                                        const Eigen::VectorXd& theta,
                                        const Field& h, const Field& k,
                                        const MetricParams& p) {
  const TriMesh mesh{mesh_fn.positions(theta), faces};
  return mesh_fn.pullback(theta, h2_vertex_grad(mesh, h, k, p));
}

}  // namespace besa
