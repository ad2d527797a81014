#pragma once

// Limited-memory quasi-Newton minimization with a strong Wolfe line search,
// plus the report structures shared by every solver in the library.

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace besa {

// Objective callback: returns the value and fills the gradient (resized by
// the caller to x.size()).
using Objective =
    std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct MinimizeOptions {
  int max_iterations = 500;
  // Stop when |grad| <= grad_tol * max(1, |grad at start|).
  double grad_tol = 1e-6;
  int history = 8;             // stored curvature pairs
  int max_line_search = 50;    // objective evaluations per line search
  // Optional observer called after every accepted iterate.
  std::function<void(int iteration, double value, double grad_norm)>
      on_iterate;
};

struct StageReport {
  int iterations = 0;
  double final_objective = 0.0;
  double final_grad_norm = 0.0;
  bool converged = false;          // gradient tolerance reached
  bool line_search_failed = false;
  std::string note;                // diagnostic for aborted stages
  // Filled by schedule-driven solvers; zero for plain minimize calls.
  double lambda = 0.0;
  double sigma = 0.0;
};

struct OptimizerReport {
  std::vector<StageReport> stages;
  double wall_time_seconds = 0.0;
  bool success = true;
};

struct MinimizeResult {
  Eigen::VectorXd x;
  StageReport report;
};

// L-BFGS with strong Wolfe conditions (c1 = 1e-4, c2 = 0.9). Terminates on
// the gradient tolerance, the iteration cap, or a failed line search (the
// failure is reported in the result, not thrown). Throws Error{numerical}
// if the objective or gradient is non-finite at x0.
MinimizeResult minimize(const Objective& objective, const Eigen::VectorXd& x0,
                        const MinimizeOptions& opts = {});

}  // namespace besa
