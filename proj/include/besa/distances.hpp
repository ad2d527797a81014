#pragma once

// Point-set and surface distances used for evaluation: symmetric Chamfer
// distance between point sets and Hausdorff distance between meshes
// (vertices against exact point-to-triangle distances).

#include <besa/mesh.hpp>

namespace besa {

// Exact distance from a point to a solid triangle.
double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b,
                               const Vec3& c);

// (1/N_a) sum_i min_j |a_i - b_j|  +  (1/N_b) sum_j min_i |b_j - a_i|.
double chamfer_distance(const VertexMatrix& points_a,
                        const VertexMatrix& points_b);

// max of the two directed vertex-to-surface distances.
double hausdorff_distance(const TriMesh& mesh_a, const TriMesh& mesh_b);

}  // namespace besa
