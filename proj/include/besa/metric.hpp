#pragma once

// Discrete second-order Sobolev metric on triangle-mesh deformation fields.
//
// For a mesh q and tangent fields h, k (one 3-vector per vertex) the inner
// product is a weighted sum of six terms:
//   a0: pointwise L2 against the lumped vertex mass,
//   a1/b1/c1/d1: first-order terms pairing the shear / stretch / bend /
//                residual (skew) components of the differential per face,
//   a2: pointwise L2 of the mass-normalized cotangent Laplacians.
// The differential split is orthogonal with respect to the inverse face
// metric, so the four first-order terms decouple exactly.

#include <functional>

#include <besa/mesh.hpp>

namespace besa {

struct MetricParams {
  double a0 = 1.0;    // zeroth order
  double a1 = 1000.0; // shear (trace-free self-adjoint part)
  double b1 = 100.0;  // stretch (trace part)
  double c1 = 1.0;    // bend (normal part)
  double d1 = 1.0;    // residual (skew part)
  double a2 = 1.0;    // second order
};

// Throws Error{invalid} unless all coefficients are >= 0 and at least one
// is > 0.
void validate_params(const MetricParams& params);

// Per-face cached quantities shared by the metric routines.
struct MeshOperators {
  FaceData faces;
  Eigen::MatrixX3d cotangents; // per face, per corner
  Eigen::VectorXd masses;      // lumped vertex masses
};

MeshOperators mesh_operators(const TriMesh& mesh);

// The four components of the differential of a field, one 3x2 matrix per
// face. shear + stretch + bend + residual == dq-differential of the field,
// and the components are pairwise orthogonal under the inverse face metric.
struct SplitDifferential {
  std::vector<Eigen::Matrix<double, 3, 2>> shear;
  std::vector<Eigen::Matrix<double, 3, 2>> stretch;
  std::vector<Eigen::Matrix<double, 3, 2>> bend;
  std::vector<Eigen::Matrix<double, 3, 2>> residual;
};

SplitDifferential split_differential(const TriMesh& mesh, const Field& h);

// G_q(h, k). Exactly symmetric in h and k (bitwise).
double h2_inner(const TriMesh& mesh, const MeshOperators& ops, const Field& h,
                const Field& k, const MetricParams& params);
double h2_inner(const TriMesh& mesh, const Field& h, const Field& k,
                const MetricParams& params);

// Dual field w with G_q(h, k) == sum_v <w_v, k_v> for every k.
Field h2_apply(const TriMesh& mesh, const MeshOperators& ops, const Field& h,
               const MetricParams& params);
Field h2_apply(const TriMesh& mesh, const Field& h,
               const MetricParams& params);

// Directional derivative of h2_apply in the mesh vertices:
//   d/dt|_0 h2_apply(q + t dir, h).
Field h2_apply_directional(const TriMesh& mesh, const Field& dir,
                           const Field& h, const MetricParams& params);

// Gradient of (positions -> G_q(h, k)) with h, k held fixed; one 3-vector
// per vertex.
Field h2_vertex_grad(const TriMesh& mesh, const MeshOperators& ops,
                     const Field& h, const Field& k,
                     const MetricParams& params);
Field h2_vertex_grad(const TriMesh& mesh, const Field& h, const Field& k,
                     const MetricParams& params);

// Differentiable map theta -> vertex positions on a fixed connectivity.
// `pullback` is the chain-rule hook: given theta and a per-vertex gradient
// it returns the Jacobian-transpose product in parameter space.
struct ParameterizedMesh {
  std::function<VertexMatrix(const Eigen::VectorXd&)> positions;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Field&)>
      pullback;
};

// Gradient of theta -> G_{q(theta)}(h, k) with the fields held fixed.
Eigen::VectorXd h2_inner_footpoint_grad(const FaceMatrix& faces,
                                        const ParameterizedMesh& mesh_fn,
                                        const Eigen::VectorXd& theta,
                                        const Field& h, const Field& k,
                                        const MetricParams& params);

}  // namespace besa
