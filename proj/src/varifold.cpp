#include "besa/varifold.hpp"

#include <cmath>
#include <cstring>

#include <Eigen/Geometry>

#include "besa/detail/smallmath.hpp"

namespace besa {
namespace {

// Deterministic order on meshes so that the summation schedule of the
// distance is a function of the unordered pair.
bool mesh_before(const TriMesh& a, const TriMesh& b) {
  if (a.face_count() != b.face_count())
    return a.face_count() < b.face_count();
  if (a.vertex_count() != b.vertex_count())
    return a.vertex_count() < b.vertex_count();
  const int vcmp =
      std::memcmp(a.vertices.data(), b.vertices.data(),
                  sizeof(double) * a.vertices.size());
  if (vcmp != 0) return vcmp < 0;
  return std::memcmp(a.faces.data(), b.faces.data(),
                     sizeof(int) * a.faces.size()) < 0;
}

// Squared distance beyond which the Gaussian underflows to exactly zero;
// clamping the exponent argument there keeps the vectorized exp inside its
// normal range and the skipped pairs contribute a true 0.
double gauss_cutoff(double inv_sigma_sq) { return 708.0 / inv_sigma_sq; }

// Sum over all face pairs of k(f_i, g_j) a_i a_j, one kernel row at a time
// with compensated accumulation across rows. Self terms are
// cross_sum(fd, fd).
double cross_sum(const FaceData& x, const FaceData& y, double inv_sigma_sq) {
  const double cutoff = gauss_cutoff(inv_sigma_sq);
  const int m = y.face_count();
  Eigen::ArrayXd d2(m), row(m);
  detail::KahanSum total;
  for (int i = 0; i < x.face_count(); ++i) {
    d2 = (y.barycenters.rowwise() - x.barycenters.row(i))
             .rowwise()
             .squaredNorm()
             .array();
    row = (y.normals * x.normals.row(i).transpose()).array();
    row = (d2 > cutoff)
              .select(0.0, (-d2.min(cutoff) * inv_sigma_sq).exp()) *
          row.square() * y.areas.array() * x.areas(i);
    total.add(row.sum());
  }
  return total.get();
}

// Gradient of cross_sum(x, y) with respect to the vertices of mesh_x only
// (y held fixed), accumulated into `out`. Returns the kernel sum of the
// block, which falls out of the same pass.
double add_cross_gradient(const TriMesh& mesh_x, const FaceData& x,
                          const FaceData& y, double inv_sigma_sq,
                          Field& out) {
  const double cutoff = gauss_cutoff(inv_sigma_sq);
  const int m = y.face_count();
  Eigen::ArrayXd d2(m), gauss(m), cosn(m), kk(m), gc(m);
  detail::KahanSum value;
  for (int i = 0; i < x.face_count(); ++i) {
    const Eigen::RowVector3d xi = x.barycenters.row(i);
    const Eigen::RowVector3d ni = x.normals.row(i);
    const double ai = x.areas(i);
    d2 = (y.barycenters.rowwise() - xi).rowwise().squaredNorm().array();
    cosn = (y.normals * ni.transpose()).array();
    gauss =
        (d2 > cutoff).select(0.0, (-d2.min(cutoff) * inv_sigma_sq).exp());
    kk = gauss * cosn.square() * y.areas.array();  // a_j k(f_i, g_j)
    gc = gauss * cosn * y.areas.array();
    const double g_area = kk.sum();  // d/d a_i
    value.add(ai * g_area);
    const Eigen::Vector3d wsum = y.barycenters.transpose() * kk.matrix();
    // d/d x_i and d/d n_i of the row sum.
    const Eigen::Vector3d g_pos = (-2.0 * inv_sigma_sq * ai) *
                                  (g_area * xi.transpose() - wsum);
    const Eigen::Vector3d g_normal =
        (2.0 * ai) * (y.normals.transpose() * gc.matrix());
    // Chain through barycenter x = (v0+v1+v2)/3, unit normal n = c/|c| and
    // area a = |c|/2 with c = (v1-v0) x (v2-v0).
    const int i0 = mesh_x.faces(i, 0);
    const int i1 = mesh_x.faces(i, 1);
    const int i2 = mesh_x.faces(i, 2);
    const Eigen::Vector3d v0 = mesh_x.vertices.row(i0).transpose();
    const Eigen::Vector3d v1 = mesh_x.vertices.row(i1).transpose();
    const Eigen::Vector3d v2 = mesh_x.vertices.row(i2).transpose();
    const Eigen::Vector3d u = v1 - v0;
    const Eigen::Vector3d w = v2 - v0;
    const double cross_norm = 2.0 * ai;
    const Eigen::Vector3d nic = ni.transpose();
    Eigen::Vector3d g_cross =
        (g_normal - nic * nic.dot(g_normal)) / cross_norm +
        (0.5 * g_area) * nic;
    const Eigen::Vector3d gu = w.cross(g_cross);
    const Eigen::Vector3d gw = g_cross.cross(u);
    const Eigen::Vector3d g_bary = g_pos / 3.0;
    out.row(i0) += (g_bary - gu - gw).transpose();
    out.row(i1) += (g_bary + gu).transpose();
    out.row(i2) += (g_bary + gw).transpose();
  }
  return value.get();
}

}  // namespace

void validate_config(const VarifoldConfig& cfg) {
  if (!(cfg.sigma > 0.0))
    throw_error(ErrorKind::invalid, "varifold sigma must be positive");
}

double varifold_distance_sq(const TriMesh& mesh_a, const TriMesh& mesh_b,
                            const VarifoldConfig& cfg) {
  validate_config(cfg);
  const TriMesh* first = &mesh_a;
  const TriMesh* second = &mesh_b;
  if (mesh_before(mesh_b, mesh_a)) std::swap(first, second);
  const FaceData fx = face_geometry(*first);
  const FaceData fy = face_geometry(*second);
  const double inv_sigma_sq = 1.0 / (cfg.sigma * cfg.sigma);
  const double self_x = cross_sum(fx, fx, inv_sigma_sq);
  const double self_y = cross_sum(fy, fy, inv_sigma_sq);
  const double cross = cross_sum(fx, fy, inv_sigma_sq);
  double total = self_x - 2.0 * cross + self_y;
  if (total < 0.0) {
    if (-total < 1e-10 * (self_x + self_y))
      total = 0.0;
    else
      throw_error(ErrorKind::internal,
                  "varifold distance evaluated significantly negative");
  }
  return total;
}

Field varifold_gradient(const TriMesh& mesh_a, const TriMesh& mesh_b,
                        const VarifoldConfig& cfg) {
  validate_config(cfg);
  const FaceData fa = face_geometry(mesh_a);
  const FaceData fb = face_geometry(mesh_b);
  const double inv_sigma_sq = 1.0 / (cfg.sigma * cfg.sigma);
  // d/dA [S(A,A) - 2 S(A,B) + S(B,B)]: the self block contributes through
  // both kernel slots, which doubles its one-slot gradient.  The blocks are
  // accumulated separately so that identical meshes cancel exactly.
  Field g_self = Field::Zero(mesh_a.vertex_count(), 3);
  Field g_cross = Field::Zero(mesh_a.vertex_count(), 3);
  add_cross_gradient(mesh_a, fa, fa, inv_sigma_sq, g_self);
  add_cross_gradient(mesh_a, fa, fb, inv_sigma_sq, g_cross);
  return 2.0 * (g_self - g_cross);
}

VarifoldReference::VarifoldReference(const TriMesh& mesh,
                                     const VarifoldConfig& cfg)
    : cfg_(cfg) {
  validate_config(cfg);
  faces_ = face_geometry(mesh);
  // The self term runs through the same pass as the per-query blocks so
  // that a query identical to the reference cancels to exactly zero.
  Field scratch = Field::Zero(mesh.vertex_count(), 3);
  self_ = add_cross_gradient(mesh, faces_, faces_,
                             1.0 / (cfg.sigma * cfg.sigma), scratch);
}

double VarifoldReference::gradient_with_value(const TriMesh& query,
                                              Field& grad) const {
  const FaceData fq = face_geometry(query);
  const double inv_sigma_sq = 1.0 / (cfg_.sigma * cfg_.sigma);
  Field g_self = Field::Zero(query.vertex_count(), 3);
  Field g_cross = Field::Zero(query.vertex_count(), 3);
  const double self_q =
      add_cross_gradient(query, fq, fq, inv_sigma_sq, g_self);
  const double cross =
      add_cross_gradient(query, fq, faces_, inv_sigma_sq, g_cross);
  grad = 2.0 * (g_self - g_cross);
  double total = (self_q - 2.0 * cross) + self_;
  if (total < 0.0) {
    if (-total < 1e-10 * (self_q + self_))
      total = 0.0;
    else
      throw_error(ErrorKind::internal,
                  "varifold distance evaluated significantly negative");
  }
  return total;
}

}  // namespace besa
