#include "besa/latent.hpp"

#include <string>

#include "besa/error.hpp"

namespace besa {
namespace {

void check_code(const Basis& basis, const LatentCode& code, const char* name) {
  if (code.size() != basis.dim())
    throw_error(ErrorKind::invalid,
                std::string(name) + " has dimension " +
                    std::to_string(code.size()) + ", basis expects " +
                    std::to_string(basis.dim()));
  if (!code.allFinite())
    throw_error(ErrorKind::invalid,
                std::string(name) + " contains non-finite entries");
}

// Re-throws degeneracy errors from metric evaluation with the path time
// index attached.
template <class Fn>
auto at_time_index(int t, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::degenerate)
      throw_error(ErrorKind::degenerate,
                  std::string(e.what()) + " at path time index " +
                      std::to_string(t));
    throw;
  }
}

}  // namespace

const Field& Basis::field_at(int j) const {
  const int n = pose_count();
  return j < n ? pose_fields[j] : shape_fields[j - n];
}

void validate_basis(const Basis& basis) {
  validate_mesh(basis.template_mesh);
  if (basis.dim() < 1)
    throw_error(ErrorKind::invalid, "basis has no fields");
  const int nv = basis.template_mesh.vertex_count();
  for (int j = 0; j < basis.dim(); ++j) {
    const Field& f = basis.field_at(j);
    if (f.rows() != nv || f.cols() != 3)
      throw_error(ErrorKind::invalid,
                  "basis field " + std::to_string(j) +
                      " does not match the template vertex count");
    if (!f.allFinite())
      throw_error(ErrorKind::invalid, "basis field " + std::to_string(j) +
                                          " contains non-finite entries");
  }
}

LatentCode zero_code(const Basis& basis) {
  return LatentCode::Zero(basis.dim());
}

LatentCode make_code(const Eigen::VectorXd& pose,
                     const Eigen::VectorXd& shape) {
  LatentCode out(pose.size() + shape.size());
  out.head(pose.size()) = pose;
  out.tail(shape.size()) = shape;
  return out;
}

void validate_path(const Basis& basis, const LatentPath& path) {
  if (path.segments() < 1)
    throw_error(ErrorKind::invalid, "path needs at least two codes");
  for (size_t t = 0; t < path.codes.size(); ++t)
    check_code(basis, path.codes[t],
               ("path code " + std::to_string(t)).c_str());
}

TriMesh decode(const Basis& basis, const LatentCode& alpha) {
  check_code(basis, alpha, "code");
  TriMesh out;
  out.vertices = basis.template_mesh.vertices;
  for (int j = 0; j < basis.dim(); ++j)
    out.vertices += alpha(j) * basis.field_at(j);
  out.faces = basis.template_mesh.faces;
  return out;
}

Field decode_field(const Basis& basis, const LatentCode& alpha) {
  check_code(basis, alpha, "code");
  Field out = Field::Zero(basis.template_mesh.vertex_count(), 3);
  for (int j = 0; j < basis.dim(); ++j) out += alpha(j) * basis.field_at(j);
  return out;
}

LatentCode basis_project(const Basis& basis, const Field& w) {
  if (w.rows() != basis.template_mesh.vertex_count() || w.cols() != 3)
    throw_error(ErrorKind::invalid,
                "field to project does not match the template vertex count");
  LatentCode out(basis.dim());
  for (int j = 0; j < basis.dim(); ++j)
    out(j) = basis.field_at(j).cwiseProduct(w).sum();
  return out;
}

double pullback_inner(const Basis& basis, const LatentCode& alpha,
                      const LatentCode& beta, const LatentCode& eta,
                      const MetricParams& params) {
  return h2_inner(decode(basis, alpha), decode_field(basis, beta),
                  decode_field(basis, eta), params);
}

LatentCode pullback_footpoint_grad(const Basis& basis, const LatentCode& alpha,
                                   const LatentCode& beta,
                                   const MetricParams& params) {
  const Field b = decode_field(basis, beta);
  ParameterizedMesh mesh_fn;
  mesh_fn.positions = [&basis](const Eigen::VectorXd& theta) {
    return decode(basis, theta).vertices;
  };
  mesh_fn.pullback = [&basis](const Eigen::VectorXd&, const Field& grad) {
    return basis_project(basis, grad);
  };
  return h2_inner_footpoint_grad(basis.template_mesh.faces, mesh_fn, alpha, b,
                                 b, params);
}

LatentCode gram_times(const Basis& basis, const LatentCode& alpha,
                      const LatentCode& beta, const MetricParams& params) {
  return basis_project(
      basis,
      h2_apply(decode(basis, alpha), decode_field(basis, beta), params));
}

LatentCode gram_times_directional(const Basis& basis, const LatentCode& alpha,
                                  const LatentCode& dir,
                                  const LatentCode& beta,
                                  const MetricParams& params) {
  return basis_project(
      basis, h2_apply_directional(decode(basis, alpha),
                                  decode_field(basis, dir),
                                  decode_field(basis, beta), params));
}

Eigen::MatrixXd gram_matrix(const Basis& basis, const LatentCode& alpha,
                            const MetricParams& params) {
  const TriMesh mesh = decode(basis, alpha);
  const MeshOperators ops = mesh_operators(mesh);
  const int d = basis.dim();
  Eigen::MatrixXd gram(d, d);
  for (int j = 0; j < d; ++j)
    gram.col(j) =
        basis_project(basis, h2_apply(mesh, ops, basis.field_at(j), params));
  // The apply/project composition is symmetric up to rounding; make it
  // exact so downstream solvers can rely on it.
  return 0.5 * (gram + gram.transpose());
}

PathEnergy path_energy(const Basis& basis, const LatentPath& path,
                       const MetricParams& params,
                       const std::vector<bool>& free_codes) {
  validate_path(basis, path);
  if (!free_codes.empty() && free_codes.size() != path.codes.size())
    throw_error(ErrorKind::invalid,
                "free-code mask does not match the path length");
  auto is_free = [&](int t) {
    return free_codes.empty() || free_codes[static_cast<size_t>(t)];
  };

  const int T = path.segments();
  PathEnergy out;
  out.gradient.assign(path.codes.size(), zero_code(basis));
  double sum = 0.0;
  for (int t = 0; t < T; ++t) {
    const LatentCode delta = path.codes[t + 1] - path.codes[t];
    const TriMesh mesh = at_time_index(t, [&] { return decode(basis, path.codes[t]); });
    const MeshOperators ops = at_time_index(t, [&] { return mesh_operators(mesh); });
    const Field df = decode_field(basis, delta);
    sum += at_time_index(t, [&] { return h2_inner(mesh, ops, df, df, params); });
    if (is_free(t) || is_free(t + 1)) {
      // d/d(delta) of G(delta, delta) through both slots.
      const LatentCode seg = 2.0 * T *
          basis_project(basis, at_time_index(t, [&] {
                          return h2_apply(mesh, ops, df, params);
                        }));
      if (is_free(t)) out.gradient[t] -= seg;
      if (is_free(t + 1)) out.gradient[t + 1] += seg;
    }
    if (is_free(t)) {
      const Field vg = at_time_index(
          t, [&] { return h2_vertex_grad(mesh, ops, df, df, params); });
      out.gradient[t] += T * basis_project(basis, vg);
    }
  }
  out.value = T * sum;
  return out;
}

LatentPath linear_interpolate(const LatentCode& alpha0,
                              const LatentCode& alpha1, int steps) {
  if (alpha0.size() != alpha1.size())
    throw_error(ErrorKind::invalid,
                "endpoint codes have different dimensions");
  if (steps < 1)
    throw_error(ErrorKind::invalid, "step count must be at least 1");
  LatentPath path;
  path.codes.reserve(static_cast<size_t>(steps) + 1);
  path.codes.push_back(alpha0);
  for (int t = 1; t < steps; ++t)
    path.codes.push_back(alpha0 + (static_cast<double>(t) / steps) *
                                      (alpha1 - alpha0));
  path.codes.push_back(alpha1);
  return path;
}

}  // namespace besa
