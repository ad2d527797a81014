#pragma once

// Pose/shape disentanglement applications: motion transfer by replacing the
// shape block of every code along a path, and random shape generation by
// fitting Gaussian mixtures to initial velocities and shooting geodesics
// from the template.

#include <cstdint>
#include <functional>
#include <vector>

#include <besa/geodesics.hpp>

namespace besa {

// Covariances are regularized so no eigenvalue falls below this floor.
inline constexpr double kCovarianceFloor = 1e-8;

// Mixture sizes used by the command-line tool when none are given.
inline constexpr int kDefaultPoseComponents = 10;
inline constexpr int kDefaultShapeComponents = 6;

// Gaussian mixture with full covariances over one coefficient block.
struct GMMModel {
  Eigen::VectorXd weights;                   // simplex, sums to 1
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covariances;  // SPD after validation

  int component_count() const { return static_cast<int>(weights.size()); }
  int dim() const {
    return means.empty() ? 0 : static_cast<int>(means.front().size());
  }
};

// Shape and simplex checks (weights nonnegative and summing to 1 within
// 1e-12), then in-place regularization: each covariance is symmetrized and
// its eigenvalues raised to kCovarianceFloor, so zero or indefinite inputs
// become usable point-mass-like components.
void validate_gmm(GMMModel& model);

// Replaces the trailing target_shape.size() entries of every code with
// target_shape; the leading (pose) entries are copied bitwise.
LatentPath transfer_motion(const LatentPath& path,
                           const Eigen::VectorXd& target_shape);

// Observer for the expectation-maximization loop; receives the iteration
// index and the log-likelihood of the model entering that iteration.
using FitObserver = std::function<void(int iteration, double log_likelihood)>;

// Expectation-maximization fit with k-means++ seeding drawn from `seed`.
// Stops when the relative log-likelihood improvement falls below 1e-8 or
// after 500 iterations. Deterministic for fixed (samples, components, seed).
GMMModel fit_gmm(const std::vector<Eigen::VectorXd>& samples, int components,
                 std::uint64_t seed, const FitObserver& observer = {});

// Time-1 initial velocity of a discrete path:
// segments * (codes[1] - codes[0]).
LatentCode initial_velocity(const LatentPath& path);

// Draws a pose and a shape velocity block, concatenates them and returns the
// endpoint of the geodesic shot from the template with that velocity.
// Bit-deterministic per seed. When the shooting fails the error message
// carries the drawn velocity so the run can be reproduced; if
// `drawn_velocity` is non-null it receives the velocity before the solve
// starts.
TriMesh sample_shape(const Basis& basis, const GMMModel& gmm_pose,
                     const GMMModel& gmm_shape, int n_steps,
                     const MetricParams& params, std::uint64_t seed,
                     int max_iterations = 500,
                     LatentCode* drawn_velocity = nullptr);

}  // namespace besa
