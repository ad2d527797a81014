#include "besa/generation.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace besa {
namespace {

const double kLogTwoPi = std::log(2.0 * M_PI);

// 53-bit uniform in (0, 1); open at zero so log() below stays finite. The
// standard-library distributions are not pinned to one algorithm, so the
// draws here are hand-rolled on top of mt19937_64 to keep seeded runs
// bit-reproducible across toolchains.
double open_uniform(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

// Box-Muller pairs; the trailing sin draw is discarded for odd dimensions.
Eigen::VectorXd normal_vector(int dim, std::mt19937_64& rng) {
  Eigen::VectorXd z(dim);
  for (int i = 0; i < dim; i += 2) {
    const double u1 = open_uniform(rng);
    const double u2 = open_uniform(rng);
    const double r = std::sqrt(-2.0 * std::log(u1));
    z(i) = r * std::cos(2.0 * M_PI * u2);
    if (i + 1 < dim) z(i + 1) = r * std::sin(2.0 * M_PI * u2);
  }
  return z;
}

// Index k with cumulative weight bracketing u * total; falls back to the
// last positively weighted entry when rounding pushes u past the sum.
int pick_index(const Eigen::VectorXd& weights, double total, double u) {
  const double target = u * total;
  double acc = 0.0;
  for (int k = 0; k < weights.size(); ++k) {
    acc += weights(k);
    if (target < acc) return k;
  }
  for (int k = static_cast<int>(weights.size()) - 1; k >= 0; --k)
    if (weights(k) > 0.0) return k;
  return static_cast<int>(weights.size()) - 1;
}

// Symmetrize and clamp eigenvalues to the floor; left untouched (beyond
// symmetrization) when already comfortably positive definite.
void floor_covariance(Eigen::MatrixXd& cov) {
  cov = 0.5 * (cov + cov.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success)
    throw_error(ErrorKind::numerical, "covariance eigendecomposition failed");
  if (es.eigenvalues().minCoeff() >= kCovarianceFloor) return;
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(kCovarianceFloor);
  cov = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  cov = 0.5 * (cov + cov.transpose()).eval();
}

std::string format_code(const LatentCode& code) {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10) << "[";
  for (int j = 0; j < code.size(); ++j) {
    if (j > 0) out << ", ";
    out << code(j);
  }
  out << "]";
  return out.str();
}

Eigen::VectorXd draw_mixture(const GMMModel& model, std::mt19937_64& rng) {
  const int k = pick_index(model.weights, 1.0, open_uniform(rng));
  const Eigen::LLT<Eigen::MatrixXd> llt(model.covariances[k]);
  if (llt.info() != Eigen::Success)
    throw_error(ErrorKind::numerical, "covariance is not positive definite");
  return model.means[k] +
         llt.matrixL() * normal_vector(model.dim(), rng);
}

double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace

void validate_gmm(GMMModel& model) {
  const int k = model.component_count();
  if (k < 1)
    throw_error(ErrorKind::invalid, "mixture needs at least one component");
  if (static_cast<int>(model.means.size()) != k ||
      static_cast<int>(model.covariances.size()) != k)
    throw_error(ErrorKind::invalid,
                "mixture weights, means and covariances disagree in count");
  const int d = model.dim();
  if (d < 1)
    throw_error(ErrorKind::invalid, "mixture dimension must be positive");
  if (!model.weights.allFinite() || model.weights.minCoeff() < 0.0)
    throw_error(ErrorKind::invalid,
                "mixture weights must be finite and nonnegative");
  if (std::abs(model.weights.sum() - 1.0) > 1e-12)
    throw_error(ErrorKind::invalid, "mixture weights must sum to 1");
  for (int i = 0; i < k; ++i) {
    if (model.means[i].size() != d || !model.means[i].allFinite())
      throw_error(ErrorKind::invalid,
                  "mixture mean " + std::to_string(i) + " is malformed");
    if (model.covariances[i].rows() != d || model.covariances[i].cols() != d ||
        !model.covariances[i].allFinite())
      throw_error(ErrorKind::invalid,
                  "mixture covariance " + std::to_string(i) + " is malformed");
    floor_covariance(model.covariances[i]);
  }
}

LatentPath transfer_motion(const LatentPath& path,
                           const Eigen::VectorXd& target_shape) {
  if (path.codes.empty())
    throw_error(ErrorKind::invalid, "motion transfer needs a non-empty path");
  const int d = static_cast<int>(path.codes.front().size());
  for (const LatentCode& code : path.codes)
    if (code.size() != d)
      throw_error(ErrorKind::invalid, "path codes disagree in dimension");
  const int m = static_cast<int>(target_shape.size());
  if (m > d)
    throw_error(ErrorKind::invalid,
                "target shape has " + std::to_string(m) +
                    " entries but codes only " + std::to_string(d));
  if (!target_shape.allFinite())
    throw_error(ErrorKind::invalid, "target shape must be finite");
  LatentPath out = path;
  for (LatentCode& code : out.codes) code.tail(m) = target_shape;
  return out;
}

GMMModel fit_gmm(const std::vector<Eigen::VectorXd>& samples, int components,
                 std::uint64_t seed, const FitObserver& observer) {
  const int s = static_cast<int>(samples.size());
  if (s == 0) throw_error(ErrorKind::invalid, "no samples to fit");
  const int d = static_cast<int>(samples.front().size());
  if (d < 1)
    throw_error(ErrorKind::invalid, "sample dimension must be positive");
  for (const Eigen::VectorXd& x : samples)
    if (x.size() != d || !x.allFinite())
      throw_error(ErrorKind::invalid, "samples disagree in dimension or are "
                                      "not finite");
  if (components < 1)
    throw_error(ErrorKind::invalid, "component count must be positive");
  if (s < components)
    throw_error(ErrorKind::invalid,
                "fewer samples (" + std::to_string(s) + ") than components (" +
                    std::to_string(components) + ")");
  bool all_same = true;
  for (int i = 1; i < s && all_same; ++i)
    all_same = (samples[i] - samples[0]).cwiseAbs().maxCoeff() == 0.0;
  if (all_same)
    throw_error(ErrorKind::invalid,
                "samples are all identical; cannot fit a mixture");

  std::mt19937_64 rng(seed);

  // k-means++ seeding: first center uniform, later ones proportional to the
  // squared distance from the chosen set.
  std::vector<int> centers;
  centers.push_back(std::min(
      s - 1, static_cast<int>(open_uniform(rng) * static_cast<double>(s))));
  Eigen::VectorXd dist_sq =
      Eigen::VectorXd::Constant(s, std::numeric_limits<double>::infinity());
  while (static_cast<int>(centers.size()) < components) {
    const Eigen::VectorXd& last = samples[centers.back()];
    for (int i = 0; i < s; ++i)
      dist_sq(i) = std::min(dist_sq(i), (samples[i] - last).squaredNorm());
    const double total = dist_sq.sum();
    if (total > 0.0 && std::isfinite(total)) {
      centers.push_back(pick_index(dist_sq, total, open_uniform(rng)));
    } else {
      centers.push_back(std::min(
          s - 1, static_cast<int>(open_uniform(rng) * static_cast<double>(s))));
    }
  }

  // Hard assignment to the nearest center (lowest index wins ties) gives the
  // initial weights, means and covariances.
  std::vector<int> assign(s, 0);
  for (int i = 0; i < s; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < components; ++k) {
      const double dk = (samples[i] - samples[centers[k]]).squaredNorm();
      if (dk < best) {
        best = dk;
        assign[i] = k;
      }
    }
  }
  GMMModel model;
  model.weights.resize(components);
  model.means.assign(components, Eigen::VectorXd::Zero(d));
  model.covariances.assign(components, Eigen::MatrixXd::Zero(d, d));
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(components);
  for (int i = 0; i < s; ++i) {
    counts(assign[i]) += 1.0;
    model.means[assign[i]] += samples[i];
  }
  for (int k = 0; k < components; ++k) {
    if (counts(k) > 0.0) {
      model.means[k] /= counts(k);
    } else {
      // Duplicate centers can strand a cluster; give it its seed point.
      model.means[k] = samples[centers[k]];
      counts(k) = 1.0;
    }
  }
  for (int i = 0; i < s; ++i) {
    const Eigen::VectorXd c = samples[i] - model.means[assign[i]];
    model.covariances[assign[i]] += c * c.transpose();
  }
  for (int k = 0; k < components; ++k) {
    model.covariances[k] /= counts(k);
    floor_covariance(model.covariances[k]);
  }
  model.weights = counts / counts.sum();

  // Expectation-maximization with log-space responsibilities.
  Eigen::MatrixXd log_resp(s, components);
  Eigen::MatrixXd resp(s, components);
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < 500; ++iter) {
    std::vector<Eigen::LLT<Eigen::MatrixXd>> llts;
    Eigen::VectorXd log_norm(components);
    Eigen::VectorXd log_w(components);
    for (int k = 0; k < components; ++k) {
      llts.emplace_back(model.covariances[k]);
      if (llts.back().info() != Eigen::Success)
        throw_error(ErrorKind::numerical,
                    "covariance lost positive definiteness during fitting");
      log_norm(k) = -0.5 * d * kLogTwoPi -
                    llts.back().matrixLLT().diagonal().array().log().sum();
      log_w(k) = model.weights(k) > 0.0
                     ? std::log(model.weights(k))
                     : -std::numeric_limits<double>::infinity();
    }
    double ll = 0.0;
    for (int i = 0; i < s; ++i) {
      for (int k = 0; k < components; ++k) {
        const Eigen::VectorXd diff = samples[i] - model.means[k];
        const double quad =
            llts[k].matrixL().solve(diff).squaredNorm();
        log_resp(i, k) = log_w(k) + log_norm(k) - 0.5 * quad;
      }
      const double lse = log_sum_exp(log_resp.row(i).transpose());
      ll += lse;
      resp.row(i) = (log_resp.row(i).array() - lse).exp();
    }
    if (observer) observer(iter, ll);
    if (iter > 0 && ll - prev_ll < 1e-8 * std::max(1.0, std::abs(ll))) break;
    prev_ll = ll;

    const Eigen::VectorXd nk = resp.colwise().sum().transpose();
    model.weights = nk / nk.sum();
    for (int k = 0; k < components; ++k) {
      if (nk(k) <= 1e-12) continue;  // dead component keeps its parameters
      Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
      for (int i = 0; i < s; ++i) mu += resp(i, k) * samples[i];
      mu /= nk(k);
      Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
      for (int i = 0; i < s; ++i) {
        const Eigen::VectorXd c = samples[i] - mu;
        cov += resp(i, k) * (c * c.transpose());
      }
      cov /= nk(k);
      floor_covariance(cov);
      model.means[k] = mu;
      model.covariances[k] = cov;
    }
  }
  validate_gmm(model);
  return model;
}

LatentCode initial_velocity(const LatentPath& path) {
  if (path.codes.size() < 2)
    throw_error(ErrorKind::invalid,
                "initial velocity needs a path with at least two codes");
  if (path.codes[1].size() != path.codes[0].size())
    throw_error(ErrorKind::invalid, "path codes disagree in dimension");
  return static_cast<double>(path.segments()) *
         (path.codes[1] - path.codes[0]);
}

TriMesh sample_shape(const Basis& basis, const GMMModel& gmm_pose,
                     const GMMModel& gmm_shape, int n_steps,
                     const MetricParams& params, std::uint64_t seed,
                     int max_iterations, LatentCode* drawn_velocity) {
  validate_basis(basis);
  GMMModel pose = gmm_pose;
  GMMModel shape = gmm_shape;
  validate_gmm(pose);
  validate_gmm(shape);
  if (pose.dim() != basis.pose_count())
    throw_error(ErrorKind::invalid,
                "pose mixture dimension " + std::to_string(pose.dim()) +
                    " does not match the basis pose count " +
                    std::to_string(basis.pose_count()));
  if (shape.dim() != basis.shape_count())
    throw_error(ErrorKind::invalid,
                "shape mixture dimension " + std::to_string(shape.dim()) +
                    " does not match the basis shape count " +
                    std::to_string(basis.shape_count()));
  if (n_steps < 1)
    throw_error(ErrorKind::invalid, "step count must be positive");

  std::mt19937_64 rng(seed);
  const LatentCode beta =
      make_code(draw_mixture(pose, rng), draw_mixture(shape, rng));
  if (drawn_velocity) *drawn_velocity = beta;

  IvpResult ivp;
  try {
    ivp = solve_ivp(basis, zero_code(basis), beta, n_steps, params,
                    max_iterations);
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(e.what()) +
                              "; drawn velocity = " + format_code(beta));
  }
  if (!ivp.success)
    throw_error(ErrorKind::numerical,
                "geodesic shooting failed at step " +
                    std::to_string(ivp.failed_step) +
                    "; drawn velocity = " + format_code(beta));
  return decode(basis, ivp.path.codes.back());
}

}  // namespace besa
