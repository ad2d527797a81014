#include "besa/basis_builder.hpp"

#include <Eigen/SVD>

#include "besa/error.hpp"

namespace besa {
namespace {

Eigen::VectorXd flatten(const Field& f) {
  Eigen::VectorXd out(3 * f.rows());
  for (int v = 0; v < f.rows(); ++v)
    for (int c = 0; c < 3; ++c) out(3 * v + c) = f(v, c);
  return out;
}

Field unflatten(const Eigen::VectorXd& x) {
  Field out(x.size() / 3, 3);
  for (int v = 0; v < out.rows(); ++v)
    for (int c = 0; c < 3; ++c) out(v, c) = x(3 * v + c);
  return out;
}

std::vector<TangentSample> harvest(const std::vector<MeshSequence>& sequences,
                                   const TriMesh& template_mesh) {
  validate_mesh(template_mesh);
  std::vector<TangentSample> out;
  for (const MeshSequence& seq : sequences) {
    if (seq.frames.size() < 2)
      throw_error(ErrorKind::invalid,
                  "sequence " + seq.id + " has fewer than two frames");
    for (size_t t = 0; t < seq.frames.size(); ++t) {
      const TriMesh& frame = seq.frames[t];
      if (frame.vertex_count() != template_mesh.vertex_count() ||
          frame.face_count() != template_mesh.face_count() ||
          frame.faces != template_mesh.faces)
        throw_error(ErrorKind::invalid,
                    "sequence " + seq.id + " frame " + std::to_string(t) +
                        " does not share the template connectivity");
    }
    for (size_t t = 0; t + 1 < seq.frames.size(); ++t) {
      TangentSample s;
      s.field = seq.frames[t + 1].vertices - seq.frames[t].vertices;
      s.sequence_id = seq.id;
      s.frame_index = static_cast<int>(t);
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace

std::vector<TangentSample> motion_tangents(
    const std::vector<MeshSequence>& sequences, const TriMesh& template_mesh) {
  return harvest(sequences, template_mesh);
}

std::vector<TangentSample> shape_tangents(
    const std::vector<MeshSequence>& paths, const TriMesh& template_mesh) {
  return harvest(paths, template_mesh);
}

PcaResult pca_basis(const std::vector<TangentSample>& samples, int count,
                    bool center) {
  if (samples.empty())
    throw_error(ErrorKind::invalid, "no samples to decompose");
  const int rows = static_cast<int>(samples.size());
  const int cols = static_cast<int>(3 * samples.front().field.rows());
  for (const TangentSample& s : samples)
    if (3 * s.field.rows() != cols || s.field.cols() != 3)
      throw_error(ErrorKind::invalid, "samples have mismatched sizes");
  if (count < 1 || count > std::min(rows, cols))
    throw_error(ErrorKind::invalid,
                "component count " + std::to_string(count) +
                    " exceeds min(sample count, degrees of freedom)");

  Eigen::MatrixXd x(rows, cols);
  for (int i = 0; i < rows; ++i) x.row(i) = flatten(samples[i].field);
  if (center) x.rowwise() -= x.colwise().mean();
  if (x.norm() == 0.0)
    throw_error(ErrorKind::invalid,
                center ? "samples are identical up to centering"
                       : "samples are all zero");

  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
  PcaResult out;
  out.spectrum = svd.singularValues().array().square();
  for (int k = 0; k < count; ++k) {
    Eigen::VectorXd v = svd.matrixV().col(k);
    int peak = 0;
    v.cwiseAbs().maxCoeff(&peak);
    if (v(peak) < 0.0) v = -v;
    out.fields.push_back(unflatten(v));
  }
  return out;
}

Basis build_basis(const std::vector<TangentSample>& motion_samples,
                  const std::vector<TangentSample>& shape_samples, int n,
                  int m, const TriMesh& template_mesh, bool center) {
  validate_mesh(template_mesh);
  Basis basis;
  basis.template_mesh = template_mesh;
  basis.pose_fields = pca_basis(motion_samples, n, center).fields;
  basis.shape_fields = pca_basis(shape_samples, m, center).fields;
  validate_basis(basis);

  // Joint independence: the stacked field matrix must have rank n + m.
  const int d = basis.dim();
  Eigen::MatrixXd stacked(3 * template_mesh.vertex_count(), d);
  for (int j = 0; j < d; ++j) stacked.col(j) = flatten(basis.field_at(j));
  Eigen::BDCSVD<Eigen::MatrixXd> svd(stacked);
  const Eigen::VectorXd& sing = svd.singularValues();
  if (sing(d - 1) <= 1e-8 * sing(0)) {
    // Each block is orthonormal on its own, so a deficiency shows up as a
    // near-unit cosine between fields; list the offending pairs.
    std::string pairs;
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) {
        const double cosine = std::abs(stacked.col(i).dot(stacked.col(j))) /
                              (stacked.col(i).norm() * stacked.col(j).norm());
        if (cosine > 0.999) {
          auto label = [&](int k) {
            return k < n ? "pose " + std::to_string(k)
                         : "shape " + std::to_string(k - n);
          };
          pairs += (pairs.empty() ? "" : ", ") + label(i) + " / " + label(j);
        }
      }
    throw_error(ErrorKind::invalid,
                "combined basis is rank deficient" +
                    (pairs.empty() ? std::string()
                                   : "; near-dependent pairs: " + pairs));
  }
  return basis;
}

}  // namespace besa
