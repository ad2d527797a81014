#pragma once

// Construction of the latent deformation basis: tangent-sample harvesting
// from registered mesh sequences and PCA over the harvested fields.

#include <string>
#include <vector>

#include <besa/latent.hpp>

namespace besa {

struct MeshSequence {
  std::string id;
  std::vector<TriMesh> frames;  // shared connectivity with the template
};

struct TangentSample {
  Field field;
  std::string sequence_id;
  int frame_index = 0;  // index of the earlier frame of the pair
};

// Finite-difference velocities frame_{t+1} - frame_t for every consecutive
// pair of every sequence. Throws naming the sequence and frame on
// connectivity mismatch; every sequence needs at least two frames.
std::vector<TangentSample> motion_tangents(
    const std::vector<MeshSequence>& sequences, const TriMesh& template_mesh);

// Identical mechanics; the inputs are same-pose cross-identity geodesic
// paths rather than motion clips.
std::vector<TangentSample> shape_tangents(
    const std::vector<MeshSequence>& paths, const TriMesh& template_mesh);

struct PcaResult {
  std::vector<Field> fields;   // orthonormal, `count` of them
  Eigen::VectorXd spectrum;    // all squared singular values, nonincreasing
};

// Top-`count` right singular vectors of the (optionally centered) sample
// matrix, reshaped to fields. Component signs are fixed by making each
// component's largest-magnitude entry positive.
PcaResult pca_basis(const std::vector<TangentSample>& samples, int count,
                    bool center = false);

// PCA both blocks and assemble the basis; verifies that the n + m fields
// are jointly independent and throws listing near-dependent pairs
// otherwise.
Basis build_basis(const std::vector<TangentSample>& motion_samples,
                  const std::vector<TangentSample>& shape_samples, int n,
                  int m, const TriMesh& template_mesh, bool center = false);

}  // namespace besa
