#include "besa/mesh.hpp"

#include <cmath>
#include <string>

#include <Eigen/Geometry>

namespace besa {

void validate_mesh(const TriMesh& mesh) {
  if (mesh.face_count() == 0)
    throw_error(ErrorKind::parse, "mesh has zero faces");
  const int nv = mesh.vertex_count();
  for (int f = 0; f < mesh.face_count(); ++f) {
    for (int c = 0; c < 3; ++c) {
      const int idx = mesh.faces(f, c);
      if (idx < 0 || idx >= nv)
        throw_error(ErrorKind::parse,
                    "face " + std::to_string(f) + " references vertex " +
                        std::to_string(idx) + " but mesh has " +
                        std::to_string(nv) + " vertices");
    }
  }
}

TriMesh with_vertices(const TriMesh& mesh, const VertexMatrix& vertices) {
  if (vertices.rows() != mesh.vertices.rows())
    throw_error(ErrorKind::invalid, "vertex count mismatch in with_vertices");
  return TriMesh{vertices, mesh.faces};
}

FaceData face_geometry(const TriMesh& mesh) {
  const int nf = mesh.face_count();
  FaceData fd;
  fd.barycenters.resize(nf, 3);
  fd.normals.resize(nf, 3);
  fd.areas.resize(nf);
  fd.edge_matrices.resize(nf);
  fd.metrics.resize(nf);
  for (int f = 0; f < nf; ++f) {
    const Vec3 v0 = mesh.vertices.row(mesh.faces(f, 0));
    const Vec3 v1 = mesh.vertices.row(mesh.faces(f, 1));
    const Vec3 v2 = mesh.vertices.row(mesh.faces(f, 2));
    const Vec3 u = v1 - v0;
    const Vec3 w = v2 - v0;
    const Vec3 cross = u.cross(w);
    const double len = cross.norm();
    const double area = 0.5 * len;
    if (area <= kDegenerateArea)
      throw_error(ErrorKind::degenerate,
                  "degenerate face " + std::to_string(f) + " (area " +
                      std::to_string(area) + ")");
    fd.barycenters.row(f) = ((v0 + v1 + v2) / 3.0).transpose();
    fd.normals.row(f) = (cross / len).transpose();
    fd.areas(f) = area;
    Eigen::Matrix<double, 3, 2> dq;
    dq.col(0) = u;
    dq.col(1) = w;
    fd.edge_matrices[f] = dq;
    fd.metrics[f] = dq.transpose() * dq;
  }
  return fd;
}

double total_area(const TriMesh& mesh) {
  return face_geometry(mesh).areas.sum();
}

double bounding_box_diagonal(const TriMesh& mesh) {
  const Vec3 lo = mesh.vertices.colwise().minCoeff();
  const Vec3 hi = mesh.vertices.colwise().maxCoeff();
  return (hi - lo).norm();
}

Eigen::VectorXd vertex_masses(const TriMesh& mesh) {
  const FaceData fd = face_geometry(mesh);
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(mesh.vertex_count());
  for (int f = 0; f < mesh.face_count(); ++f) {
    const double third = fd.areas(f) / 3.0;
    for (int c = 0; c < 3; ++c) mass(mesh.faces(f, c)) += third;
  }
  return mass;
}

Eigen::MatrixX3d corner_cotangents(const TriMesh& mesh) {
  const int nf = mesh.face_count();
  Eigen::MatrixX3d cots(nf, 3);
  for (int f = 0; f < nf; ++f) {
    const Vec3 v0 = mesh.vertices.row(mesh.faces(f, 0));
    const Vec3 v1 = mesh.vertices.row(mesh.faces(f, 1));
    const Vec3 v2 = mesh.vertices.row(mesh.faces(f, 2));
    const Vec3 u = v1 - v0;
    const Vec3 w = v2 - v0;
    const double cross_norm = u.cross(w).norm();
    if (cross_norm <= 2.0 * kDegenerateArea)
      throw_error(ErrorKind::degenerate,
                  "degenerate face " + std::to_string(f) +
                      " in cotangent weights");
    // cot at corner c = (e1 . e2) / |e1 x e2| for the two edges leaving c;
    // all three share the same cross product magnitude.
    cots(f, 0) = u.dot(w) / cross_norm;
    cots(f, 1) = (u.dot(u) - u.dot(w)) / cross_norm;
    cots(f, 2) = (w.dot(w) - u.dot(w)) / cross_norm;
  }
  return cots;
}

Field cotan_matrix_apply(const TriMesh& mesh, const Eigen::MatrixX3d& cots,
                         const Field& field) {
  if (field.rows() != mesh.vertices.rows())
    throw_error(ErrorKind::invalid,
                "field has " + std::to_string(field.rows()) +
                    " rows but mesh has " +
                    std::to_string(mesh.vertex_count()) + " vertices");
  Field out = Field::Zero(mesh.vertex_count(), 3);
  for (int f = 0; f < mesh.face_count(); ++f) {
    for (int c = 0; c < 3; ++c) {
      const int a = mesh.faces(f, (c + 1) % 3);
      const int b = mesh.faces(f, (c + 2) % 3);
      const Eigen::RowVector3d diff =
          0.5 * cots(f, c) * (field.row(b) - field.row(a));
      out.row(a) += diff;
      out.row(b) -= diff;
    }
  }
  return out;
}

Field laplacian_apply(const TriMesh& mesh, const Field& field) {
  const Eigen::MatrixX3d cots = corner_cotangents(mesh);
  Field out = cotan_matrix_apply(mesh, cots, field);
  const Eigen::VectorXd mass = vertex_masses(mesh);
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    // A vertex with no incident face has zero mass and a zero cotangent row.
    if (mass(v) > 0.0)
      out.row(v) /= mass(v);
    else
      out.row(v).setZero();
  }
  return out;
}

}  // namespace besa
