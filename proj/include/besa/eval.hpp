#pragma once

// Reconstruction quality metrics: per-pair mean squared vertex error (only
// when the meshes share connectivity), Hausdorff, Chamfer and squared
// varifold distances, with aggregate means.

#include <optional>
#include <string>
#include <vector>

#include <besa/distances.hpp>
#include <besa/varifold.hpp>

namespace besa {

struct EvalCase {
  std::string name;
  std::optional<double> mse;  // absent when connectivities differ
  double hausdorff = 0.0;
  double chamfer = 0.0;
  double varifold_sq = 0.0;
};

struct EvalRecord {
  std::vector<EvalCase> cases;
  std::optional<double> mean_mse;  // over the cases where MSE applies
  double mean_hausdorff = 0.0;
  double mean_chamfer = 0.0;
  double mean_varifold_sq = 0.0;
};

// Pairs outputs[i] with ground_truth[i]; `names` (when given) labels the
// cases. Throws on empty input or mismatched list lengths.
EvalRecord eval_reconstruction(const std::vector<TriMesh>& outputs,
                               const std::vector<TriMesh>& ground_truth,
                               const VarifoldConfig& cfg,
                               const std::vector<std::string>& names = {});

}  // namespace besa
