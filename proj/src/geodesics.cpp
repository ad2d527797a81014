#include "besa/geodesics.hpp"

#include <chrono>
#include <cmath>

#include "besa/error.hpp"

namespace besa {
namespace {

constexpr double kIvpRelTol = 1e-6;
// The stationarity residual is a difference of one-sided metric terms; once
// it cancels to this fraction of their scale it is numerically zero even
// when the relative target (tiny for near-zero velocities) is out of reach.
constexpr double kIvpTermFloor = 1e-9;

// Data attachment at one path endpoint.
struct DataTerm {
  int code_index;
  const TriMesh* target;
};

std::vector<LatentCode> unpack(const Basis& basis, const Eigen::VectorXd& x,
                               const LatentPath& shape,
                               const std::vector<bool>& free_codes) {
  std::vector<LatentCode> codes = shape.codes;
  int at = 0;
  for (size_t t = 0; t < codes.size(); ++t)
    if (free_codes[t]) {
      codes[t] = x.segment(at, basis.dim());
      at += basis.dim();
    }
  return codes;
}

Eigen::VectorXd pack(const Basis& basis, const LatentPath& path,
                     const std::vector<bool>& free_codes) {
  int count = 0;
  for (bool f : free_codes) count += f ? 1 : 0;
  Eigen::VectorXd x(count * basis.dim());
  int at = 0;
  for (size_t t = 0; t < path.codes.size(); ++t)
    if (free_codes[t]) {
      x.segment(at, basis.dim()) = path.codes[t];
      at += basis.dim();
    }
  return x;
}

// Shared stage driver for the relaxed problems.
BvpResult run_stages(const Basis& basis, LatentPath path,
                     const std::vector<bool>& free_codes,
                     const std::vector<DataTerm>& data,
                     const MetricParams& params, const ScheduleConfig& sched,
                     bool use_data_terms) {
  BvpResult out;
  const auto t_start = std::chrono::steady_clock::now();

  MinimizeOptions opts;
  opts.max_iterations = sched.max_iterations;
  opts.grad_tol = sched.grad_tol;

  const std::vector<Stage> stages =
      use_data_terms ? sched.stages : std::vector<Stage>{Stage{}};
  for (const Stage& stage : stages) {
    const VarifoldConfig vconf{stage.sigma};
    std::vector<VarifoldReference> refs;
    if (use_data_terms)
      for (const DataTerm& term : data) refs.emplace_back(*term.target, vconf);
    Objective objective = [&](const Eigen::VectorXd& x,
                              Eigen::VectorXd& grad) {
      LatentPath work;
      work.codes = unpack(basis, x, path, free_codes);
      PathEnergy pe = path_energy(basis, work, params, free_codes);
      double f = pe.value;
      if (use_data_terms)
        for (size_t di = 0; di < data.size(); ++di) {
          const DataTerm& term = data[di];
          const TriMesh dec = decode(basis, work.codes[term.code_index]);
          if (free_codes[term.code_index]) {
            Field vg;
            f += stage.lambda * refs[di].gradient_with_value(dec, vg);
            pe.gradient[term.code_index] +=
                stage.lambda * basis_project(basis, vg);
          } else {
            f += stage.lambda *
                 varifold_distance_sq(dec, *term.target, vconf);
          }
        }
      LatentPath gpath;
      gpath.codes = pe.gradient;
      grad = pack(basis, gpath, free_codes);
      return f;
    };

    StageReport sr;
    sr.lambda = stage.lambda;
    sr.sigma = stage.sigma;
    try {
      MinimizeResult mres = minimize(objective, pack(basis, path, free_codes),
                                     opts);
      sr.iterations = mres.report.iterations;
      sr.final_objective = mres.report.final_objective;
      sr.final_grad_norm = mres.report.final_grad_norm;
      sr.converged = mres.report.converged;
      sr.line_search_failed = mres.report.line_search_failed;
      sr.note = mres.report.note;
      path.codes = unpack(basis, mres.x, path, free_codes);
      out.report.stages.push_back(sr);
    } catch (const Error& e) {
      sr.note = e.what();
      out.report.stages.push_back(sr);
      out.report.success = false;
      break;  // earlier-stage path is returned unchanged
    }
  }
  out.path = std::move(path);
  out.report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return out;
}

}  // namespace

std::vector<Stage> geometric_stages(double lambda_from, double lambda_to,
                                    double sigma_from, double sigma_to,
                                    int count) {
  if (count < 1 || lambda_from <= 0.0 || lambda_to <= 0.0 ||
      sigma_from <= 0.0 || sigma_to <= 0.0)
    throw_error(ErrorKind::invalid, "invalid stage schedule endpoints");
  std::vector<Stage> stages;
  for (int k = 0; k < count; ++k) {
    const double s = count == 1 ? 0.0 : static_cast<double>(k) / (count - 1);
    stages.push_back(
        Stage{lambda_from * std::pow(lambda_to / lambda_from, s),
              sigma_from * std::pow(sigma_to / sigma_from, s)});
  }
  return stages;
}

ScheduleConfig ScheduleConfig::defaults() {
  ScheduleConfig sched;
  sched.stages = geometric_stages(1e2, 1e8, 0.4, 0.025, 5);
  return sched;
}

void validate_schedule(const ScheduleConfig& sched) {
  if (sched.stages.empty())
    throw_error(ErrorKind::invalid, "schedule has no stages");
  for (size_t k = 0; k < sched.stages.size(); ++k) {
    if (sched.stages[k].lambda <= 0.0 || sched.stages[k].sigma <= 0.0)
      throw_error(ErrorKind::invalid,
                  "stage parameters must be positive");
    if (k > 0 && (sched.stages[k].lambda < sched.stages[k - 1].lambda ||
                  sched.stages[k].sigma > sched.stages[k - 1].sigma))
      throw_error(ErrorKind::invalid,
                  "lambdas must be nondecreasing and sigmas nonincreasing");
  }
  if (sched.steps < 1)
    throw_error(ErrorKind::invalid, "path step count must be at least 1");
  if (sched.max_iterations < 1 || sched.grad_tol <= 0.0)
    throw_error(ErrorKind::invalid, "invalid iteration limits");
}

BvpResult solve_bvp(const Basis& basis, const TriMesh& q0, const TriMesh& q1,
                    const MetricParams& params, const ScheduleConfig& sched) {
  validate_basis(basis);
  validate_params(params);
  validate_schedule(sched);
  validate_mesh(q0);
  validate_mesh(q1);
  LatentPath path;
  path.codes.assign(static_cast<size_t>(sched.steps) + 1, zero_code(basis));
  const std::vector<bool> free_codes(path.codes.size(), true);
  const std::vector<DataTerm> data{{0, &q0}, {sched.steps, &q1}};
  return run_stages(basis, std::move(path), free_codes, data, params, sched,
                    true);
}

BvpResult solve_bvp_codes(const Basis& basis, const LatentCode& alpha0,
                          const LatentCode& alpha1, const MetricParams& params,
                          const ScheduleConfig& sched) {
  validate_basis(basis);
  validate_params(params);
  validate_schedule(sched);
  LatentPath path = linear_interpolate(alpha0, alpha1, sched.steps);
  std::vector<bool> free_codes(path.codes.size(), true);
  free_codes.front() = false;
  free_codes.back() = false;
  if (sched.steps == 1) {
    // Both codes fixed; nothing to optimize.
    BvpResult out;
    out.path = std::move(path);
    return out;
  }
  return run_stages(basis, std::move(path), free_codes, {}, params, sched,
                    false);
}

RetrieveResult retrieve_latent(const Basis& basis, const TriMesh& target,
                               const MetricParams& params,
                               const ScheduleConfig& sched) {
  validate_basis(basis);
  validate_params(params);
  validate_schedule(sched);
  validate_mesh(target);
  LatentPath path;
  path.codes.assign(static_cast<size_t>(sched.steps) + 1, zero_code(basis));
  std::vector<bool> free_codes(path.codes.size(), true);
  free_codes.front() = false;  // the path starts at the template
  const std::vector<DataTerm> data{{sched.steps, &target}};
  BvpResult bvp = run_stages(basis, std::move(path), free_codes, data, params,
                             sched, true);
  RetrieveResult out;
  out.code = bvp.path.codes.back();
  out.mesh = decode(basis, out.code);
  out.path = std::move(bvp.path);
  out.report = std::move(bvp.report);
  return out;
}

IvpStepResult ivp_step(const Basis& basis, const LatentCode& alpha0,
                       const LatentCode& alpha1, const MetricParams& params,
                       int max_iterations) {
  validate_basis(basis);
  validate_params(params);
  const LatentCode beta0 = alpha1 - alpha0;
  // Constant and footpoint-1 pieces of the stationarity system Phi.
  const LatentCode c0 = 2.0 * gram_times(basis, alpha0, beta0, params);
  const Eigen::MatrixXd gram1 = gram_matrix(basis, alpha1, params);

  auto phi = [&](const LatentCode& beta_t) -> LatentCode {
    return c0 - 2.0 * (gram1 * beta_t) +
           pullback_footpoint_grad(basis, alpha1, beta_t, params);
  };

  IvpStepResult out;
  out.reference = phi(beta0).norm();

  Objective objective = [&](const Eigen::VectorXd& beta_t,
                            Eigen::VectorXd& grad) {
    const LatentCode res = phi(beta_t);
    grad = -4.0 * (gram1 * res) +
           4.0 * gram_times_directional(basis, alpha1, res, beta_t, params);
    return res.squaredNorm();
  };

  MinimizeOptions opts;
  opts.max_iterations = max_iterations;
  opts.grad_tol = 1e-10;
  const MinimizeResult mres = minimize(objective, beta0, opts);
  out.alpha2 = alpha1 + mres.x;
  out.residual = std::sqrt(std::max(0.0, mres.report.final_objective));
  out.iterations = mres.report.iterations;
  out.success = out.residual <=
                std::max(kIvpRelTol * out.reference, kIvpTermFloor * c0.norm());
  return out;
}

IvpResult solve_ivp(const Basis& basis, const LatentCode& alpha0,
                    const LatentCode& beta, int n_steps,
                    const MetricParams& params, int max_iterations) {
  validate_basis(basis);
  validate_params(params);
  if (n_steps < 1)
    throw_error(ErrorKind::invalid, "step count must be at least 1");
  if (beta.size() != basis.dim())
    throw_error(ErrorKind::invalid,
                "velocity dimension does not match the basis");
  IvpResult out;
  out.path.codes.push_back(alpha0);
  out.path.codes.push_back(alpha0 + beta / n_steps);
  for (int s = 1; s < n_steps; ++s) {
    const size_t last = out.path.codes.size() - 1;
    const IvpStepResult step = ivp_step(basis, out.path.codes[last - 1],
                                        out.path.codes[last], params,
                                        max_iterations);
    out.residuals.push_back(step.residual);
    if (!step.success) {
      out.success = false;
      out.failed_step = s;
      return out;
    }
    out.path.codes.push_back(step.alpha2);
  }
  return out;
}

}  // namespace besa
