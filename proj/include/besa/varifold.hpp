#pragma once

// Squared varifold kernel distance between triangle meshes and its gradient.
// Each face contributes a weighted point (barycenter, unit normal, area);
// the kernel is Gaussian in position and squared-cosine in orientation:
//   k(x, n, x', n') = exp(-|x - x'|^2 / sigma^2) (n . n')^2.
// The distance needs no correspondences and tolerates differing mesh
// structure on the two sides.

#include <besa/mesh.hpp>

namespace besa {

struct VarifoldConfig {
  double sigma = 0.4;  // positive length scale of the position kernel
};

void validate_config(const VarifoldConfig& cfg);

// Squared distance, >= 0. Exactly symmetric in its arguments: the pair is
// brought into a canonical order before summation, so both argument orders
// run the identical accumulation.
double varifold_distance_sq(const TriMesh& mesh_a, const TriMesh& mesh_b,
                            const VarifoldConfig& cfg);

// Analytic gradient of varifold_distance_sq with respect to mesh_a's vertex
// positions (chained through barycenters, normals and areas).
Field varifold_gradient(const TriMesh& mesh_a, const TriMesh& mesh_b,
                        const VarifoldConfig& cfg);

// Repeated evaluations against a fixed mesh, as needed by the relaxation
// solvers: the reference face data and self term are computed once, and the
// distance value falls out of the same pass as the gradient.
class VarifoldReference {
 public:
  VarifoldReference(const TriMesh& mesh, const VarifoldConfig& cfg);

  // Squared varifold distance between `query` and the reference; fills
  // `grad` with its gradient with respect to the query vertices.
  double gradient_with_value(const TriMesh& query, Field& grad) const;

 private:
  VarifoldConfig cfg_;
  FaceData faces_;
  double self_ = 0.0;
};

}  // namespace besa
