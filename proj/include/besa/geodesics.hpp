#pragma once

// Geodesic boundary-value and initial-value solvers over the latent model:
// multiresolution relaxed matching against target meshes (interpolation and
// latent code retrieval) and discrete geodesic shooting (extrapolation).

#include <besa/latent.hpp>
#include <besa/optimizer.hpp>
#include <besa/varifold.hpp>

namespace besa {

struct Stage {
  double lambda = 0.0;  // data-term weight
  double sigma = 0.0;   // varifold kernel width
};

struct ScheduleConfig {
  std::vector<Stage> stages;  // lambdas nondecreasing, sigmas nonincreasing
  int steps = 10;             // path segment count T
  int max_iterations = 500;   // per stage
  double grad_tol = 1e-6;     // relative, per stage
  // Five stages, sigma geometric 0.4 -> 0.025, lambda geometric 1e2 -> 1e8.
  static ScheduleConfig defaults();
};

void validate_schedule(const ScheduleConfig& sched);

// Geometric interpolation between from and to over `count` stages.
std::vector<Stage> geometric_stages(double lambda_from, double lambda_to,
                                    double sigma_from, double sigma_to,
                                    int count);

struct BvpResult {
  LatentPath path;
  OptimizerReport report;
};

// Relaxed boundary value problem: minimizes path energy plus
// lambda * (varifold to q0 at t=0 + varifold to q1 at t=1) over all codes,
// stage by stage, warm-starting from the previous stage; the initial path
// is identically zero. A degeneracy mid-stage aborts with the last
// completed stage's path and report.success = false.
BvpResult solve_bvp(const Basis& basis, const TriMesh& q0, const TriMesh& q1,
                    const MetricParams& params, const ScheduleConfig& sched);

// Geodesic between two fixed codes: interior codes free, no data terms,
// straight-line initialization.
BvpResult solve_bvp_codes(const Basis& basis, const LatentCode& alpha0,
                          const LatentCode& alpha1, const MetricParams& params,
                          const ScheduleConfig& sched);

struct RetrieveResult {
  LatentCode code;
  TriMesh mesh;  // decode(code)
  LatentPath path;
  OptimizerReport report;
};

// One-sided relaxed BVP from the template: code at t=0 fixed to zero, data
// term only at t=1. The endpoint code is the latent representation of the
// target.
RetrieveResult retrieve_latent(const Basis& basis, const TriMesh& target,
                               const MetricParams& params,
                               const ScheduleConfig& sched);

struct IvpStepResult {
  LatentCode alpha2;
  double residual = 0.0;   // |Phi| at alpha2
  double reference = 0.0;  // |Phi| at the forward-Euler guess alpha1 + beta0
  // residual <= 1e-6 * reference, or at the cancellation noise floor of the
  // one-sided terms Phi is built from (covers near-zero velocities).
  bool success = false;
  int iterations = 0;
};

// One step of the discrete geodesic recursion: given consecutive codes
// (alpha0, alpha1), finds alpha2 making alpha1 the discrete midpoint by
// driving the stationarity system Phi to zero in the least-squares sense.
IvpStepResult ivp_step(const Basis& basis, const LatentCode& alpha0,
                       const LatentCode& alpha1, const MetricParams& params,
                       int max_iterations = 500);

struct IvpResult {
  LatentPath path;  // partial when a step fails
  bool success = true;
  int failed_step = -1;  // index of the first failing recursion step
  std::vector<double> residuals;
};

// Shoots the discrete geodesic from alpha0 with initial velocity beta:
// alpha_1 = alpha0 + beta / n_steps, then n_steps - 1 recursion steps.
IvpResult solve_ivp(const Basis& basis, const LatentCode& alpha0,
                    const LatentCode& beta, int n_steps,
                    const MetricParams& params, int max_iterations = 500);

}  // namespace besa
