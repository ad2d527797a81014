#pragma once

#include <vector>

#include <Eigen/Core>

#include "besa/error.hpp"

namespace besa {

using Vec3 = Eigen::Vector3d;
using VertexMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3>;
using FaceMatrix = Eigen::Matrix<int, Eigen::Dynamic, 3>;

// Per-vertex 3-vector field on a fixed mesh connectivity (tangent vectors,
// deformation fields, gradients). Row v is the vector at vertex v.
using Field = Eigen::Matrix<double, Eigen::Dynamic, 3>;

// Faces below this area are treated as degenerate and the metric refuses to
// evaluate. Between kDegenerateArea and kPinvArea the first fundamental form
// is inverted by eigenvalue-truncated pseudo-inverse so transient optimizer
// iterates don't abort a solve.
inline constexpr double kDegenerateArea = 1e-12;
inline constexpr double kPinvArea = 1e-9;
inline constexpr double kPinvEigenCutoff = 1e-9;

// Triangle mesh: vertex positions plus 0-based face index triples.
// Connectivity is fixed after construction; decoded shapes share faces.
struct TriMesh {
  VertexMatrix vertices;
  FaceMatrix faces;

  int vertex_count() const { return static_cast<int>(vertices.rows()); }
  int face_count() const { return static_cast<int>(faces.rows()); }
};

// Checks index bounds and non-empty face list; throws on violation.
void validate_mesh(const TriMesh& mesh);

// Same connectivity, new vertex positions.
TriMesh with_vertices(const TriMesh& mesh, const VertexMatrix& vertices);

// Per-face differential geometry: barycenter, unit normal, area, the
// embedded edge matrix dq = [v1-v0, v2-v0] and the first fundamental form
// g = dq^T dq.
struct FaceData {
  VertexMatrix barycenters;                   // F x 3
  VertexMatrix normals;                       // F x 3, unit length
  Eigen::VectorXd areas;                      // F
  std::vector<Eigen::Matrix<double, 3, 2>> edge_matrices;  // dq per face
  std::vector<Eigen::Matrix2d> metrics;                    // g per face

  int face_count() const { return static_cast<int>(areas.size()); }
};

// Throws ErrorKind::degenerate (naming the face) if any face area is below
// kDegenerateArea.
FaceData face_geometry(const TriMesh& mesh);

double total_area(const TriMesh& mesh);
double bounding_box_diagonal(const TriMesh& mesh);

// Lumped (barycentric) vertex masses: one third of incident face areas.
Eigen::VectorXd vertex_masses(const TriMesh& mesh);

// Half-cotangent weights per face corner: cots(f, c) = cot of the angle at
// corner c of face f, which feeds the edge opposite c with weight 1/2.
Eigen::MatrixX3d corner_cotangents(const TriMesh& mesh);

// Unnormalized cotangent Laplacian: (L u)_v = sum_{u~v} w_uv (u_u - u_v),
// w_uv = (cot a + cot b) / 2 over the faces sharing edge uv.
Field cotan_matrix_apply(const TriMesh& mesh, const Eigen::MatrixX3d& cots,
                         const Field& field);

// Mass-normalized vector Laplacian (Delta u)_v = (L u)_v / M_v.
Field laplacian_apply(const TriMesh& mesh, const Field& field);

}  // namespace besa
