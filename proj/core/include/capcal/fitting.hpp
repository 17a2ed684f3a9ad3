#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

/// Generic weighted nonlinear least-squares engine (damped Gauss-Newton)
/// with parameter covariance, chi^2 statistics, and model-comparison
/// helpers. The engine is stateless and deterministic: identical inputs
/// and options yield bit-identical results.
namespace capcal::fitting {

/// (x, y, sigma) samples. sigma is the 1-sigma uncertainty of y and must
/// be positive everywhere when a weighted fit is requested.
struct DataSeries {
  struct Point {
    double x;
    double y;
    double sigma;
  };
  std::vector<Point> points;
};

struct FitResult {
  std::vector<double> params;
  std::vector<double> std_errors;              // sqrt(diag(covariance))
  std::vector<std::vector<double>> covariance; // empty when unavailable
  double chi2 = 0.0;
  int dof = 0;
  double chi2_red = 0.0;
  bool converged = false;
  int iterations = 0;
  /// chi^2 after each accepted step, starting from the initial point.
  /// Monotone non-increasing by construction.
  std::vector<double> chi2_trace;
  /// Set by unweighted_fit: covariance was scaled by RSS/dof and
  /// chi2_red is 1 by construction.
  bool residual_scaled = false;
  std::string message;  // non-convergence diagnostics
  std::vector<std::string> param_names;  // optional, filled by workflows
};

/// Scalar model y = f(x; theta). Return NaN to signal a domain violation
/// at a trial point; the engine rejects the step and retreats.
using ModelFn = std::function<double(double x, std::span<const double>)>;

/// Optional analytic Jacobian: fills df/dtheta_j for every parameter at
/// one x. When absent the engine uses forward differences with relative
/// step 1e-7 (absolute floor 1e-12).
using JacobianFn =
    std::function<void(double x, std::span<const double>, std::span<double>)>;

struct FitOptions {
  int max_iter = 400;
  double rel_tol = 1e-10;
  double damping_init = 1e-3;
  double damping_factor = 10.0;  // multiplicative, up on reject / down on accept
  double damping_max = 1e14;
};

/// Minimizes sum_i ((y_i - f(x_i; theta)) / sigma_i)^2. fixed_mask marks
/// parameters frozen at their initial values (empty = all free).
/// Covariance is the inverse of the weighted normal matrix at the
/// solution; a singular normal matrix is reported as non-convergence
/// with empty covariance, never fabricated. A non-finite model value at
/// the initial point throws std::domain_error naming x and theta.
FitResult weighted_nls_fit(const DataSeries& data, const ModelFn& model,
                           std::vector<double> init,
                           const std::vector<bool>& fixed_mask = {},
                           const FitOptions& options = {},
                           const JacobianFn& jacobian = nullptr);

/// Unweighted variant for series lacking sigma: minimizes the raw
/// residual sum, then scales the covariance by s^2 = RSS/dof and reports
/// chi2_red = 1 with the residual_scaled flag set.
FitResult unweighted_fit(const DataSeries& data, const ModelFn& model,
                         std::vector<double> init,
                         const std::vector<bool>& fixed_mask = {},
                         const FitOptions& options = {},
                         const JacobianFn& jacobian = nullptr);

/// Closed-form weighted constant fit:
/// mean = sum(y/s^2)/sum(1/s^2), std_error = sum(1/s^2)^(-1/2).
FitResult constant_fit(const DataSeries& data);

struct ModelComparison {
  double delta_chi2;      // chi2_a - chi2_b
  double chi2_red_ratio;  // chi2_red_a / chi2_red_b
  std::string preferred;  // label of the lower reduced chi^2
  bool inconclusive;      // ratio within 1% of unity
};

/// Prefers the lower reduced chi^2; both fits must be on the same data
/// (caller-asserted).
ModelComparison compare_models(const FitResult& fit_a, const FitResult& fit_b,
                               const std::string& label_a = "A",
                               const std::string& label_b = "B");

}  // namespace capcal::fitting
