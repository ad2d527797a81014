#include "besa/optimizer.hpp"

#include <cmath>
#include <deque>

#include "besa/error.hpp"

namespace besa {
namespace {

constexpr double kC1 = 1e-4;  // sufficient decrease
constexpr double kC2 = 0.9;   // curvature

bool bad_point(double f, const Eigen::VectorXd& g) {
  return !std::isfinite(f) || !g.allFinite();
}

struct TrialPoint {
  double alpha = 0.0;
  double f = 0.0;
  Eigen::VectorXd x, g;
  bool ok = false;
};

// Strong Wolfe search along d from (x, f0, g0); bracketing plus bisection
// zoom. Non-finite trial values are treated as beyond the admissible
// region.
class LineSearch {
 public:
  LineSearch(const Objective& objective, const Eigen::VectorXd& x, double f0,
             const Eigen::VectorXd& d, double dphi0, int budget)
      : objective_(objective), x_(x), d_(d), f0_(f0), dphi0_(dphi0),
        budget_(budget) {}

  TrialPoint run() {
    double a_prev = 0.0, f_prev = f0_, dphi_prev = dphi0_;
    double a = 1.0;
    for (int i = 0; budget_ > 0; ++i) {
      if (!eval(a)) break;
      if (bad_ || f_ > f0_ + kC1 * a * dphi0_ || (i > 0 && f_ >= f_prev))
        return zoom(a_prev, f_prev, dphi_prev, a);
      const double dphi = g_.dot(d_);
      if (std::abs(dphi) <= -kC2 * dphi0_) return accept(a);
      if (dphi >= 0.0) return zoom(a, f_, dphi, a_prev);
      a_prev = a;
      f_prev = f_;
      dphi_prev = dphi;
      a *= 2.0;
    }
    return {};
  }

 private:
  bool eval(double a) {
    if (budget_-- <= 0) return false;
    xt_ = x_ + a * d_;
    g_.resize(x_.size());
    f_ = objective_(xt_, g_);
    bad_ = bad_point(f_, g_);
    return true;
  }

  TrialPoint accept(double a) {
    TrialPoint t;
    t.alpha = a;
    t.f = f_;
    t.x = xt_;
    t.g = g_;
    t.ok = true;
    return t;
  }

  TrialPoint zoom(double alo, double flo, double dphilo, double ahi) {
    while (budget_ > 0) {
      if (std::abs(ahi - alo) <= 1e-16 * std::max(1.0, std::abs(alo)))
        return {};
      const double a = 0.5 * (alo + ahi);
      if (!eval(a)) break;
      if (bad_ || f_ > f0_ + kC1 * a * dphi0_ || f_ >= flo) {
        ahi = a;
        continue;
      }
      const double dphi = g_.dot(d_);
      if (std::abs(dphi) <= -kC2 * dphi0_) return accept(a);
      if (dphi * (ahi - alo) >= 0.0) ahi = alo;
      alo = a;
      flo = f_;
      dphilo = dphi;
    }
    (void)dphilo;
    return {};
  }

  const Objective& objective_;
  const Eigen::VectorXd& x_;
  const Eigen::VectorXd& d_;
  const double f0_, dphi0_;
  int budget_;
  Eigen::VectorXd xt_, g_;
  double f_ = 0.0;
  bool bad_ = false;
};

}  // namespace

MinimizeResult minimize(const Objective& objective, const Eigen::VectorXd& x0,
                        const MinimizeOptions& opts) {
  if (opts.max_iterations < 0 || opts.grad_tol <= 0.0 || opts.history < 1 ||
      opts.max_line_search < 3)
    throw_error(ErrorKind::invalid, "invalid minimizer options");

  MinimizeResult res;
  res.x = x0;
  Eigen::VectorXd g(x0.size());
  double f = objective(res.x, g);
  if (bad_point(f, g))
    throw_error(ErrorKind::numerical,
                "objective is not finite at the starting point");
  const double gref = std::max(1.0, g.norm());

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho;
  Eigen::VectorXd q, d;

  auto descent_direction = [&]() {
    q = g;
    const int k = static_cast<int>(s_hist.size());
    std::vector<double> a(static_cast<size_t>(k));
    for (int i = k - 1; i >= 0; --i) {
      a[i] = rho[i] * s_hist[i].dot(q);
      q -= a[i] * y_hist[i];
    }
    if (k > 0) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (int i = 0; i < k; ++i) {
      const double b = rho[i] * y_hist[i].dot(q);
      q += (a[i] - b) * s_hist[i];
    }
    return -q;
  };

  while (res.report.iterations < opts.max_iterations) {
    if (g.norm() <= opts.grad_tol * gref) {
      res.report.converged = true;
      break;
    }
    d = descent_direction();
    double dphi0 = g.dot(d);
    if (!(dphi0 < 0.0)) {
      // Unusable curvature information; restart from steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho.clear();
      d = -g;
      dphi0 = -g.squaredNorm();
    }
    TrialPoint t =
        LineSearch(objective, res.x, f, d, dphi0, opts.max_line_search).run();
    if (!t.ok) {
      res.report.line_search_failed = true;
      res.report.note = "line search failed to satisfy the Wolfe conditions";
      break;
    }
    const Eigen::VectorXd s = t.x - res.x;
    const Eigen::VectorXd y = t.g - g;
    res.x = t.x;
    f = t.f;
    g = t.g;
    ++res.report.iterations;
    if (opts.on_iterate)
      opts.on_iterate(res.report.iterations, f, g.norm());
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opts.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho.pop_front();
      }
    }
  }
  if (g.norm() <= opts.grad_tol * gref) res.report.converged = true;
  res.report.final_objective = f;
  res.report.final_grad_norm = g.norm();
  return res;
}

}  // namespace besa
