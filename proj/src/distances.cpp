#include "besa/distances.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace besa {
namespace {

Vec3 closest_point_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len_sq = ab.squaredNorm();
  if (len_sq == 0.0) return a;
  const double t = std::clamp((p - a).dot(ab) / len_sq, 0.0, 1.0);
  return a + t * ab;
}

// Closest point on a solid triangle (Voronoi-region walk).
Vec3 closest_point_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                            const Vec3& c) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0)
    return a + (d1 / (d1 - d3)) * ab;

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0)
    return a + (d2 / (d2 - d6)) * ac;

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);

  const double denom = va + vb + vc;
  if (denom <= 0.0) {
    // Degenerate (collinear) triangle: fall back to the edges.
    const Vec3 e0 = closest_point_segment(p, a, b);
    const Vec3 e1 = closest_point_segment(p, b, c);
    const Vec3 e2 = closest_point_segment(p, c, a);
    Vec3 best = e0;
    if ((p - e1).squaredNorm() < (p - best).squaredNorm()) best = e1;
    if ((p - e2).squaredNorm() < (p - best).squaredNorm()) best = e2;
    return best;
  }
  const double v = vb / denom;
  const double w = vc / denom;
  return a + v * ab + w * ac;
}

double directed_hausdorff(const TriMesh& from, const TriMesh& to) {
  double worst = 0.0;
  for (int v = 0; v < from.vertex_count(); ++v) {
    const Vec3 p = from.vertices.row(v).transpose();
    double best = std::numeric_limits<double>::infinity();
    for (int f = 0; f < to.face_count(); ++f) {
      const Vec3 a = to.vertices.row(to.faces(f, 0)).transpose();
      const Vec3 b = to.vertices.row(to.faces(f, 1)).transpose();
      const Vec3 c = to.vertices.row(to.faces(f, 2)).transpose();
      best = std::min(best, (p - closest_point_triangle(p, a, b, c)).norm());
      if (best == 0.0) break;
    }
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace

double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b,
                               const Vec3& c) {
  return (p - closest_point_triangle(p, a, b, c)).norm();
}

double chamfer_distance(const VertexMatrix& points_a,
                        const VertexMatrix& points_b) {
  if (points_a.rows() == 0 || points_b.rows() == 0)
    throw_error(ErrorKind::invalid, "chamfer distance of an empty point set");
  auto one_sided = [](const VertexMatrix& from, const VertexMatrix& to) {
    double sum = 0.0;
    for (int i = 0; i < from.rows(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < to.rows(); ++j)
        best = std::min(best, (from.row(i) - to.row(j)).norm());
      sum += best;
    }
    return sum / static_cast<double>(from.rows());
  };
  return one_sided(points_a, points_b) + one_sided(points_b, points_a);
}

double hausdorff_distance(const TriMesh& mesh_a, const TriMesh& mesh_b) {
  if (mesh_a.vertex_count() == 0 || mesh_b.vertex_count() == 0 ||
      mesh_a.face_count() == 0 || mesh_b.face_count() == 0)
    throw_error(ErrorKind::invalid, "hausdorff distance of an empty mesh");
  return std::max(directed_hausdorff(mesh_a, mesh_b),
                  directed_hausdorff(mesh_b, mesh_a));
}

}  // namespace besa
