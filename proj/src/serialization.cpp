#include "besa/serialization.hpp"

#include <fstream>
#include <string>
#include <utility>
#include <vector>

namespace besa {
namespace {

[[noreturn]] void bad_json(const std::string& what) {
  throw_error(ErrorKind::parse, what);
}

Eigen::VectorXd vector_from_json(const Json& j, const char* what) {
  if (!j.is_array()) bad_json(std::string(what) + " must be an array");
  Eigen::VectorXd out(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number())
      bad_json(std::string(what) + " entry " + std::to_string(i) +
               " is not a number");
    out(static_cast<int>(i)) = j[i].get<double>();
  }
  return out;
}

Json vector_to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

const Json& require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    bad_json("missing field \"" + std::string(key) + "\"");
  return j.at(key);
}

}  // namespace

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io: return "io";
    case ErrorKind::parse: return "parse";
    case ErrorKind::invalid: return "invalid";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::internal: return "internal";
  }
  return "unknown";
}

Json code_to_json(const LatentCode& code, int pose_count) {
  if (pose_count < 0 || pose_count > code.size())
    throw_error(ErrorKind::invalid, "pose block length out of range");
  return Json{{"pose", vector_to_json(code.head(pose_count))},
              {"shape", vector_to_json(code.tail(code.size() - pose_count))}};
}

LatentCode code_from_json(const Json& j, int* pose_count) {
  const Eigen::VectorXd pose = vector_from_json(require(j, "pose"), "pose");
  const Eigen::VectorXd shape = vector_from_json(require(j, "shape"), "shape");
  if (pose.size() + shape.size() == 0) bad_json("code has no coefficients");
  if (pose_count) *pose_count = static_cast<int>(pose.size());
  return make_code(pose, shape);
}

Json path_to_json(const LatentPath& path, int pose_count) {
  Json codes = Json::array();
  for (const LatentCode& code : path.codes)
    codes.push_back(code_to_json(code, pose_count));
  return Json{{"codes", std::move(codes)}};
}

LatentPath path_from_json(const Json& j, int* pose_count) {
  const Json& codes = require(j, "codes");
  if (!codes.is_array() || codes.empty())
    bad_json("\"codes\" must be a non-empty array");
  LatentPath path;
  int n0 = 0;
  for (std::size_t t = 0; t < codes.size(); ++t) {
    int n = 0;
    path.codes.push_back(code_from_json(codes[t], &n));
    if (t == 0)
      n0 = n;
    else if (n != n0 || path.codes[t].size() != path.codes[0].size())
      bad_json("path code " + std::to_string(t) +
               " disagrees with the first code's block sizes");
  }
  if (pose_count) *pose_count = n0;
  return path;
}

Json gmm_to_json(const GMMModel& model) {
  Json means = Json::array();
  Json covariances = Json::array();
  for (const Eigen::VectorXd& mu : model.means)
    means.push_back(vector_to_json(mu));
  for (const Eigen::MatrixXd& cov : model.covariances) {
    Json flat = Json::array();
    for (int r = 0; r < cov.rows(); ++r)
      for (int c = 0; c < cov.cols(); ++c) flat.push_back(cov(r, c));
    covariances.push_back(std::move(flat));
  }
  return Json{{"weights", vector_to_json(model.weights)},
              {"means", std::move(means)},
              {"covariances", std::move(covariances)}};
}

GMMModel gmm_from_json(const Json& j) {
  GMMModel model;
  model.weights = vector_from_json(require(j, "weights"), "weights");
  const Json& means = require(j, "means");
  const Json& covariances = require(j, "covariances");
  if (!means.is_array() || !covariances.is_array() ||
      means.size() != covariances.size() ||
      static_cast<Eigen::Index>(means.size()) != model.weights.size())
    bad_json("mixture weights, means and covariances disagree in count");
  if (means.empty()) bad_json("mixture has no components");
  for (std::size_t k = 0; k < means.size(); ++k) {
    model.means.push_back(vector_from_json(means[k], "mean"));
    const int d = static_cast<int>(model.means.back().size());
    const Eigen::VectorXd flat =
        vector_from_json(covariances[k], "covariance");
    if (flat.size() != static_cast<Eigen::Index>(d) * d)
      bad_json("covariance " + std::to_string(k) + " has " +
               std::to_string(flat.size()) + " entries, expected " +
               std::to_string(d * d));
    Eigen::MatrixXd cov(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) cov(r, c) = flat(r * d + c);
    model.covariances.push_back(std::move(cov));
  }
  return model;
}

Json report_to_json(const OptimizerReport& report) {
  Json stages = Json::array();
  for (const StageReport& s : report.stages) {
    stages.push_back(Json{{"iterations", s.iterations},
                          {"final_objective", s.final_objective},
                          {"final_grad_norm", s.final_grad_norm},
                          {"converged", s.converged},
                          {"line_search_failed", s.line_search_failed},
                          {"note", s.note},
                          {"lambda", s.lambda},
                          {"sigma", s.sigma}});
  }
  return Json{{"success", report.success},
              {"wall_time_seconds", report.wall_time_seconds},
              {"stages", std::move(stages)}};
}

Json eval_to_json(const EvalRecord& record) {
  Json cases = Json::array();
  for (const EvalCase& c : record.cases) {
    Json entry{{"name", c.name},
               {"hausdorff", c.hausdorff},
               {"chamfer", c.chamfer},
               {"varifold_sq", c.varifold_sq}};
    if (c.mse) entry["mse"] = *c.mse;
    cases.push_back(std::move(entry));
  }
  Json aggregate{{"hausdorff", record.mean_hausdorff},
                 {"chamfer", record.mean_chamfer},
                 {"varifold_sq", record.mean_varifold_sq}};
  if (record.mean_mse) aggregate["mse"] = *record.mean_mse;
  return Json{{"cases", std::move(cases)},
              {"aggregate", std::move(aggregate)}};
}

Json error_to_json(const Error& error) {
  return Json{{"error", Json{{"kind", error_kind_name(error.kind())},
                             {"message", error.what()}}}};
}

Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_error(ErrorKind::io, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::parse, path.string() + ": " + e.what());
  }
}

void save_json(const Json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw_error(ErrorKind::io, "cannot open " + path.string() + " for writing");
  out << j.dump(2) << "\n";
  out.flush();
  if (!out) throw_error(ErrorKind::io, "failed to write " + path.string());
}

}  // namespace besa
