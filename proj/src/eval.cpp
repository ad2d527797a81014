#include "besa/eval.hpp"

#include <string>

namespace besa {
namespace {

bool same_connectivity(const TriMesh& a, const TriMesh& b) {
  return a.vertex_count() == b.vertex_count() &&
         a.face_count() == b.face_count() &&
         (a.faces.array() == b.faces.array()).all();
}

}  // namespace

EvalRecord eval_reconstruction(const std::vector<TriMesh>& outputs,
                               const std::vector<TriMesh>& ground_truth,
                               const VarifoldConfig& cfg,
                               const std::vector<std::string>& names) {
  if (outputs.size() != ground_truth.size())
    throw_error(ErrorKind::invalid,
                "got " + std::to_string(outputs.size()) + " outputs but " +
                    std::to_string(ground_truth.size()) + " ground truths");
  if (outputs.empty())
    throw_error(ErrorKind::invalid, "no mesh pairs to evaluate");
  if (!names.empty() && names.size() != outputs.size())
    throw_error(ErrorKind::invalid, "case name list length mismatch");
  validate_config(cfg);

  EvalRecord record;
  double sum_mse = 0.0;
  int mse_count = 0;
  for (size_t i = 0; i < outputs.size(); ++i) {
    const TriMesh& out = outputs[i];
    const TriMesh& truth = ground_truth[i];
    validate_mesh(out);
    validate_mesh(truth);
    EvalCase c;
    c.name = names.empty() ? "case " + std::to_string(i) : names[i];
    c.hausdorff = hausdorff_distance(out, truth);
    c.chamfer = chamfer_distance(out.vertices, truth.vertices);
    c.varifold_sq = varifold_distance_sq(out, truth, cfg);
    if (same_connectivity(out, truth)) {
      c.mse = (out.vertices - truth.vertices).rowwise().squaredNorm().mean();
      sum_mse += *c.mse;
      ++mse_count;
    }
    record.mean_hausdorff += c.hausdorff;
    record.mean_chamfer += c.chamfer;
    record.mean_varifold_sq += c.varifold_sq;
    record.cases.push_back(std::move(c));
  }
  const double count = static_cast<double>(record.cases.size());
  record.mean_hausdorff /= count;
  record.mean_chamfer /= count;
  record.mean_varifold_sq /= count;
  if (mse_count > 0) record.mean_mse = sum_mse / mse_count;
  return record;
}

}  // namespace besa
