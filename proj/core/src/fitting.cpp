#include "capcal/fitting.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace capcal::fitting {

namespace {

std::string format_theta(std::span<const double> theta) {
  std::ostringstream os;
  os << "(";
  for (size_t j = 0; j < theta.size(); ++j) os << (j ? ", " : "") << theta[j];
  os << ")";
  return os.str();
}

// Evaluates the model on the whole series. Returns false if any value is
// non-finite (trial rejected); if `initial`, throws instead, naming the
// offending point and parameter vector.
bool eval_model(const DataSeries& data, const ModelFn& model,
                std::span<const double> theta, std::vector<double>& out,
                bool initial) {
  out.resize(data.points.size());
  for (size_t i = 0; i < data.points.size(); ++i) {
    const double f = model(data.points[i].x, theta);
    if (!std::isfinite(f)) {
      if (initial) {
        std::ostringstream os;
        os << "model returned non-finite value at x = " << data.points[i].x
           << ", theta = " << format_theta(theta);
        throw std::domain_error(os.str());
      }
      return false;
    }
    out[i] = f;
  }
  return true;
}

double weighted_chi2(const DataSeries& data, const std::vector<double>& f,
                     const std::vector<double>& inv_sigma) {
  double chi2 = 0.0;
  for (size_t i = 0; i < f.size(); ++i) {
    const double r = (data.points[i].y - f[i]) * inv_sigma[i];
    chi2 += r * r;
  }
  return chi2;
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Weighted Jacobian over the free parameters only. Returns false when a
// finite-difference probe leaves the model's domain on both sides.
bool build_jacobian(const DataSeries& data, const ModelFn& model,
                    const JacobianFn& jacobian,
                    const std::vector<double>& theta,
                    const std::vector<size_t>& free_idx,
                    const std::vector<double>& f,
                    const std::vector<double>& inv_sigma, Eigen::MatrixXd& jw) {
  const size_t n = data.points.size();
  const size_t nfree = free_idx.size();
  jw.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(nfree));
  if (jacobian) {
    std::vector<double> row(theta.size());
    for (size_t i = 0; i < n; ++i) {
      jacobian(data.points[i].x, theta, row);
      for (size_t j = 0; j < nfree; ++j) {
        const double v = row[free_idx[j]];
        if (!std::isfinite(v)) return false;
        jw(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            v * inv_sigma[i];
      }
    }
    return true;
  }
  std::vector<double> probe = theta;
  std::vector<double> fp;
  for (size_t j = 0; j < nfree; ++j) {
    const size_t k = free_idx[j];
    const double step = std::max(1e-7 * std::abs(theta[k]), 1e-12);
    probe[k] = theta[k] + step;
    bool forward = eval_model(data, model, probe, fp, false);
    double sign = 1.0;
    if (!forward) {
      probe[k] = theta[k] - step;
      if (!eval_model(data, model, probe, fp, false)) return false;
      sign = -1.0;
    }
    for (size_t i = 0; i < n; ++i) {
      jw(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          sign * (fp[i] - f[i]) / step * inv_sigma[i];
    }
    probe[k] = theta[k];
  }
  return true;
}

FitResult engine(const DataSeries& data, const ModelFn& model,
                 std::vector<double> init, const std::vector<bool>& fixed_mask,
                 const FitOptions& options, const JacobianFn& jacobian,
                 const std::vector<double>& inv_sigma) {
  const size_t npar = init.size();
  if (!fixed_mask.empty() && fixed_mask.size() != npar) {
    throw std::invalid_argument("fixed_mask size does not match parameters");
  }
  std::vector<size_t> free_idx;
  for (size_t j = 0; j < npar; ++j) {
    if (fixed_mask.empty() || !fixed_mask[j]) free_idx.push_back(j);
  }
  if (free_idx.empty()) {
    throw std::invalid_argument("at least one parameter must be free");
  }
  const size_t n = data.points.size();
  const int dof = static_cast<int>(n) - static_cast<int>(free_idx.size());
  if (dof < 1) {
    throw std::invalid_argument("fit requires dof >= 1 (points - free params)");
  }

  FitResult res;
  res.dof = dof;

  std::vector<double> theta = std::move(init);
  std::vector<double> f;
  eval_model(data, model, theta, f, true);
  double chi2 = weighted_chi2(data, f, inv_sigma);
  res.chi2_trace.push_back(chi2);

  const size_t nfree = free_idx.size();
  Eigen::MatrixXd jw;
  Eigen::VectorXd rw(static_cast<Eigen::Index>(n));
  double lambda = options.damping_init;
  bool converged = false;
  int iter = 0;
  std::string message;

  std::vector<double> trial(npar), ftrial;
  while (iter < options.max_iter && !converged) {
    ++iter;
    if (!build_jacobian(data, model, jacobian, theta, free_idx, f, inv_sigma,
                        jw)) {
      message = "Jacobian evaluation left the model domain";
      break;
    }
    for (size_t i = 0; i < n; ++i) {
      rw(static_cast<Eigen::Index>(i)) = (data.points[i].y - f[i]) * inv_sigma[i];
    }
    Eigen::MatrixXd normal = jw.transpose() * jw;
    Eigen::VectorXd grad = jw.transpose() * rw;
    Eigen::VectorXd diag = normal.diagonal();
    for (Eigen::Index j = 0; j < diag.size(); ++j) {
      if (!(diag(j) > 0.0)) diag(j) = 1.0;
    }

    bool accepted = false;
    while (lambda <= options.damping_max) {
      Eigen::MatrixXd damped = normal;
      damped.diagonal() += lambda * diag;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
      if (ldlt.info() != Eigen::Success) {
        lambda *= options.damping_factor;
        continue;
      }
      Eigen::VectorXd delta = ldlt.solve(grad);
      if (!delta.allFinite()) {
        lambda *= options.damping_factor;
        continue;
      }
      trial = theta;
      for (size_t j = 0; j < nfree; ++j) {
        trial[free_idx[j]] += delta(static_cast<Eigen::Index>(j));
      }
      const double step_norm = delta.norm();
      const bool small_step = step_norm < options.rel_tol * (1.0 + norm(theta));
      if (!eval_model(data, model, trial, ftrial, false)) {
        if (small_step) {
          converged = true;  // pinned against a domain boundary
          break;
        }
        lambda *= options.damping_factor;
        continue;
      }
      const double chi2_trial = weighted_chi2(data, ftrial, inv_sigma);
      if (chi2_trial <= chi2) {
        const double rel_decrease =
            (chi2 - chi2_trial) / std::max(chi2, 1e-300);
        theta = trial;
        f = ftrial;
        chi2 = chi2_trial;
        res.chi2_trace.push_back(chi2);
        lambda = std::max(lambda / options.damping_factor, 1e-15);
        accepted = true;
        if (rel_decrease < options.rel_tol || small_step) converged = true;
        break;
      }
      if (small_step) {
        // The damped step is negligible and still does not improve chi^2:
        // we are at a local minimum to within tolerance.
        converged = true;
        break;
      }
      lambda *= options.damping_factor;
    }
    if (!accepted && !converged) {
      if (message.empty()) message = "damping exhausted without an accepted step";
      break;
    }
  }
  if (!converged && message.empty()) message = "maximum iterations reached";

  res.params = theta;
  res.chi2 = chi2;
  res.chi2_red = chi2 / dof;
  res.iterations = iter;
  res.converged = converged;
  res.message = message;

  // Covariance = inverse weighted normal matrix at the solution, expanded
  // to the full parameter set with zero rows/cols for frozen parameters.
  if (build_jacobian(data, model, jacobian, theta, free_idx, f, inv_sigma,
                     jw)) {
    Eigen::MatrixXd normal = jw.transpose() * jw;
    // Jacobi scaling: parameters here span ~25 orders of magnitude
    // (farads vs volts), which would otherwise defeat the invertibility
    // test even for perfectly regular problems.
    Eigen::VectorXd scale = normal.diagonal().cwiseSqrt();
    bool scalable = true;
    for (Eigen::Index j = 0; j < scale.size(); ++j) {
      if (!(scale(j) > 0.0) || !std::isfinite(scale(j))) scalable = false;
    }
    Eigen::MatrixXd scaled = normal;
    if (scalable) {
      scaled = scale.cwiseInverse().asDiagonal() * normal *
               scale.cwiseInverse().asDiagonal();
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(scaled);
    if (scalable && lu.isInvertible()) {
      Eigen::MatrixXd cov_free = scale.cwiseInverse().asDiagonal() *
                                 lu.inverse() *
                                 scale.cwiseInverse().asDiagonal();
      res.covariance.assign(npar, std::vector<double>(npar, 0.0));
      res.std_errors.assign(npar, 0.0);
      for (size_t a = 0; a < nfree; ++a) {
        for (size_t b = 0; b < nfree; ++b) {
          res.covariance[free_idx[a]][free_idx[b]] =
              cov_free(static_cast<Eigen::Index>(a),
                       static_cast<Eigen::Index>(b));
        }
      }
      for (size_t j = 0; j < npar; ++j) {
        res.std_errors[j] = std::sqrt(std::max(res.covariance[j][j], 0.0));
      }
    } else {
      res.converged = false;
      res.message = "singular normal matrix at the solution; no covariance";
    }
  }
  return res;
}

}  // namespace

FitResult weighted_nls_fit(const DataSeries& data, const ModelFn& model,
                           std::vector<double> init,
                           const std::vector<bool>& fixed_mask,
                           const FitOptions& options,
                           const JacobianFn& jacobian) {
  if (data.points.empty()) throw std::invalid_argument("empty data series");
  std::vector<double> inv_sigma(data.points.size());
  for (size_t i = 0; i < data.points.size(); ++i) {
    const double s = data.points[i].sigma;
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw std::invalid_argument("weighted fit requires sigma > 0 at point " +
                                  std::to_string(i));
    }
    inv_sigma[i] = 1.0 / s;
  }
  return engine(data, model, std::move(init), fixed_mask, options, jacobian,
                inv_sigma);
}

FitResult unweighted_fit(const DataSeries& data, const ModelFn& model,
                         std::vector<double> init,
                         const std::vector<bool>& fixed_mask,
                         const FitOptions& options, const JacobianFn& jacobian) {
  if (data.points.empty()) throw std::invalid_argument("empty data series");
  std::vector<double> inv_sigma(data.points.size(), 1.0);
  FitResult res = engine(data, model, std::move(init), fixed_mask, options,
                         jacobian, inv_sigma);
  const double s2 = res.chi2 / res.dof;  // residual variance
  const double s = std::sqrt(s2);
  for (auto& row : res.covariance) {
    for (auto& v : row) v *= s2;
  }
  for (auto& e : res.std_errors) e *= s;
  res.chi2_red = 1.0;
  res.residual_scaled = true;
  return res;
}

FitResult constant_fit(const DataSeries& data) {
  const size_t n = data.points.size();
  if (n < 2) {
    throw std::invalid_argument("constant_fit requires at least 2 points");
  }
  double sw = 0.0, swy = 0.0;
  for (const auto& p : data.points) {
    if (!(p.sigma > 0.0)) {
      throw std::invalid_argument("constant_fit requires all sigma > 0");
    }
    const double w = 1.0 / (p.sigma * p.sigma);
    sw += w;
    swy += w * p.y;
  }
  const double mean = swy / sw;
  double chi2 = 0.0;
  for (const auto& p : data.points) {
    const double r = (p.y - mean) / p.sigma;
    chi2 += r * r;
  }
  FitResult res;
  res.params = {mean};
  const double se = 1.0 / std::sqrt(sw);
  res.std_errors = {se};
  res.covariance = {{se * se}};
  res.chi2 = chi2;
  res.dof = static_cast<int>(n) - 1;
  res.chi2_red = chi2 / res.dof;
  res.converged = true;
  res.iterations = 0;
  res.chi2_trace = {chi2};
  res.param_names = {"mean"};
  return res;
}

ModelComparison compare_models(const FitResult& fit_a, const FitResult& fit_b,
                               const std::string& label_a,
                               const std::string& label_b) {
  ModelComparison cmp;
  cmp.delta_chi2 = fit_a.chi2 - fit_b.chi2;
  cmp.chi2_red_ratio = fit_a.chi2_red / fit_b.chi2_red;
  cmp.inconclusive = std::abs(cmp.chi2_red_ratio - 1.0) < 0.01;
  if (cmp.inconclusive) {
    cmp.preferred = "inconclusive";
  } else {
    cmp.preferred = fit_a.chi2_red < fit_b.chi2_red ? label_a : label_b;
  }
  return cmp;
}

}  // namespace capcal::fitting
