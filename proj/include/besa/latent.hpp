#pragma once

// Basis-restricted latent model over a fixed template mesh: an affine decode
// map from low-dimensional codes to vertex positions, the pullback of the
// Sobolev metric to code space, and the discrete path energy whose critical
// points are the geodesics the solvers compute.

#include <vector>

#include <besa/metric.hpp>

namespace besa {

// Code vector; pose block first (basis.pose_count() entries), shape block
// second.
using LatentCode = Eigen::VectorXd;

struct Basis {
  TriMesh template_mesh;
  std::vector<Field> pose_fields;   // per-vertex displacement fields
  std::vector<Field> shape_fields;

  int pose_count() const { return static_cast<int>(pose_fields.size()); }
  int shape_count() const { return static_cast<int>(shape_fields.size()); }
  int dim() const { return pose_count() + shape_count(); }
  // Pose-first flat indexing over both blocks.
  const Field& field_at(int j) const;
};

// Shape/finiteness checks: valid template, every field V x 3 and finite,
// at least one field. (Linear independence is enforced where bases are
// built, not on every use.)
void validate_basis(const Basis& basis);

LatentCode zero_code(const Basis& basis);
LatentCode make_code(const Eigen::VectorXd& pose, const Eigen::VectorXd& shape);

struct LatentPath {
  std::vector<LatentCode> codes;  // T+1 codes at times 0, 1/T, ..., 1
  int segments() const { return static_cast<int>(codes.size()) - 1; }
};

void validate_path(const Basis& basis, const LatentPath& path);

// Decoded vertex positions: template + sum_j alpha_j * field_j.
TriMesh decode(const Basis& basis, const LatentCode& alpha);

// The displacement part of decode: decode(alpha) - template, as a field.
Field decode_field(const Basis& basis, const LatentCode& alpha);

// Adjoint of decode_field: out_j = <w, field_j> summed over vertices.
LatentCode basis_project(const Basis& basis, const Field& w);

// Pullback metric at footpoint alpha applied to code directions beta, eta.
double pullback_inner(const Basis& basis, const LatentCode& alpha,
                      const LatentCode& beta, const LatentCode& eta,
                      const MetricParams& params);

// Gradient over alpha of the scalar map alpha -> pullback_inner(alpha, beta,
// beta) with beta held fixed.
LatentCode pullback_footpoint_grad(const Basis& basis, const LatentCode& alpha,
                                   const LatentCode& beta,
                                   const MetricParams& params);

// (Gram(alpha) * beta)_j = pullback_inner(alpha, beta, e_j); one metric
// apply instead of dim() inner products.
LatentCode gram_times(const Basis& basis, const LatentCode& alpha,
                      const LatentCode& beta, const MetricParams& params);

// Directional derivative d/ds|_0 gram_times(alpha + s * dir, beta).
LatentCode gram_times_directional(const Basis& basis, const LatentCode& alpha,
                                  const LatentCode& dir,
                                  const LatentCode& beta,
                                  const MetricParams& params);

// Full Gram matrix of the pullback metric at alpha.
Eigen::MatrixXd gram_matrix(const Basis& basis, const LatentCode& alpha,
                            const MetricParams& params);

struct PathEnergy {
  double value = 0.0;
  // One gradient vector per code; identically zero for codes not marked
  // free.
  std::vector<LatentCode> gradient;
};

// Discrete path energy E = T * sum_t pullback_inner(alpha_t, delta_t,
// delta_t) with delta_t = alpha_{t+1} - alpha_t (left-endpoint footpoints),
// plus its analytic gradient with respect to the codes marked free.
// An empty mask means all codes are free.
PathEnergy path_energy(const Basis& basis, const LatentPath& path,
                       const MetricParams& params,
                       const std::vector<bool>& free_codes = {});

// Straight-line path alpha_0 + (t/T)(alpha_1 - alpha_0), t = 0..T; the
// first and last codes are the inputs exactly (no rounding at the ends).
LatentPath linear_interpolate(const LatentCode& alpha0,
                              const LatentCode& alpha1, int steps);

}  // namespace besa
