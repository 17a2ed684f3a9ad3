#include "capcal/vzero.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "capcal/stats.hpp"

namespace capcal::vzero {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

fitting::DataSeries to_data(const VZeroSeries& series) {
  fitting::DataSeries data;
  data.points.reserve(series.points.size());
  for (const auto& p : series.points) {
    if (!(p.sigma > 0.0)) {
      throw std::invalid_argument("VZeroSeries requires all sigma > 0");
    }
    data.points.push_back({p.distance, p.v0, p.sigma});
  }
  return data;
}

}  // namespace

ConstancyReport constancy_from_stats(double chi2, int dof,
                                     double weighted_mean,
                                     double mean_std_error, double sample_std,
                                     double mean_sigma,
                                     double unweighted_mean) {
  if (dof < 1) throw std::invalid_argument("constancy report requires dof >= 1");
  ConstancyReport r;
  r.chi2 = chi2;
  r.dof = dof;
  r.chi2_red = chi2 / dof;
  r.survival_prob = stats::chi2_survival(chi2, dof);
  r.weighted_mean = weighted_mean;
  r.unweighted_mean = unweighted_mean;
  r.mean_std_error = mean_std_error;
  r.sample_std = sample_std;
  r.mean_sigma = mean_sigma;
  r.inflation_factor = std::sqrt(r.chi2_red);
  r.inflated_mean_sigma = r.inflation_factor * mean_sigma;
  r.degenerate_inflation = !(chi2 > 0.0);
  if (weighted_mean == 0.0) {
    r.rel_err_before = nan;
    r.rel_err_after = nan;
  } else {
    r.rel_err_before = 100.0 * mean_sigma / std::abs(weighted_mean);
    r.rel_err_after = 100.0 * r.inflated_mean_sigma / std::abs(weighted_mean);
  }
  return r;
}

ConstancyReport constancy_test(const VZeroSeries& series) {
  const size_t n = series.points.size();
  if (n < 2) {
    throw std::invalid_argument("constancy test requires at least 2 points");
  }
  const auto fit = fitting::constant_fit(to_data(series));

  double mean = 0.0, mean_sigma = 0.0;
  for (const auto& p : series.points) {
    mean += p.v0;
    mean_sigma += p.sigma;
  }
  mean /= static_cast<double>(n);
  mean_sigma /= static_cast<double>(n);
  double ss = 0.0;
  for (const auto& p : series.points) ss += (p.v0 - mean) * (p.v0 - mean);
  const double sample_std = std::sqrt(ss / static_cast<double>(n - 1));

  return constancy_from_stats(fit.chi2, fit.dof, fit.params[0],
                              fit.std_errors[0], sample_std, mean_sigma, mean);
}

std::pair<double, double> relative_errors(const ConstancyReport& report) {
  if (report.weighted_mean == 0.0) {
    throw std::domain_error("relative errors undefined for zero mean");
  }
  return {report.rel_err_before, report.rel_err_after};
}

ScatterComparison scatter_comparison(const VZeroSeries& series) {
  const auto report = constancy_test(series);
  return {report.sample_std, report.mean_sigma,
          report.sample_std / report.mean_sigma};
}

VZeroSeries inflate_errors(const VZeroSeries& series, double factor) {
  if (!(factor > 0.0)) {
    throw std::domain_error("inflation factor must be > 0");
  }
  VZeroSeries out = series;
  for (auto& p : out.points) p.sigma *= factor;
  return out;
}

namespace {

struct SinusoidSeed {
  double amplitude;
  double wavelength;
  double phase;
};

// Coarse weighted periodogram of the residuals about the weighted mean:
// scans log-spaced trial wavelengths in [lambda_min, lambda_max] and
// solves the 2x2 normal equations for the in-phase/quadrature amplitudes
// at the best one.
SinusoidSeed periodogram_seed(const VZeroSeries& series, double mean,
                              double lambda_min, double lambda_max) {
  constexpr int n_trial = 256;
  const double two_pi = 2.0 * std::numbers::pi;
  double best_power = -1.0, best_lambda = lambda_min;
  double best_a = 0.0, best_b = 0.0;
  const double log_min = std::log(lambda_min);
  const double step = (std::log(lambda_max) - log_min) / (n_trial - 1);
  for (int t = 0; t < n_trial; ++t) {
    const double lambda = std::exp(log_min + step * t);
    double sss = 0.0, scc = 0.0, ssc = 0.0, sys = 0.0, syc = 0.0;
    for (const auto& p : series.points) {
      const double w = 1.0 / (p.sigma * p.sigma);
      const double arg = two_pi * p.distance / lambda;
      const double s = std::sin(arg), c = std::cos(arg);
      const double r = p.v0 - mean;
      sss += w * s * s;
      scc += w * c * c;
      ssc += w * s * c;
      sys += w * r * s;
      syc += w * r * c;
    }
    const double det = sss * scc - ssc * ssc;
    if (!(std::abs(det) > 0.0)) continue;
    const double a = (sys * scc - syc * ssc) / det;  // sin coefficient
    const double b = (syc * sss - sys * ssc) / det;  // cos coefficient
    const double power = a * sys + b * syc;
    if (power > best_power) {
      best_power = power;
      best_lambda = lambda;
      best_a = a;
      best_b = b;
    }
  }
  // a*sin + b*cos = A*sin(arg + phi) with A = hypot(a,b), phi = atan2(b,a).
  return {std::hypot(best_a, best_b), best_lambda, std::atan2(best_b, best_a)};
}

}  // namespace

TrendFits trend_fits(const VZeroSeries& series) {
  const auto data = to_data(series);
  TrendFits out;
  out.constant = fitting::constant_fit(data);

  const fitting::ModelFn linear_model = [](double x,
                                           std::span<const double> th) {
    return th[0] + th[1] * x;
  };
  // Analytic Jacobian: the finite-difference probe of a zero slope seed
  // underflows against the intercept at nanometer-scale abscissae.
  const fitting::JacobianFn linear_jac =
      [](double x, std::span<const double>, std::span<double> out_row) {
        out_row[0] = 1.0;
        out_row[1] = x;
      };
  out.linear = fitting::weighted_nls_fit(
      data, linear_model, {out.constant.params[0], 0.0}, {}, {}, linear_jac);
  out.linear.param_names = {"a", "b"};

  if (series.points.size() >= 6) {
    std::vector<double> d;
    d.reserve(series.points.size());
    for (const auto& p : series.points) d.push_back(p.distance);
    std::sort(d.begin(), d.end());
    std::vector<double> gaps;
    for (size_t i = 1; i < d.size(); ++i) gaps.push_back(d[i] - d[i - 1]);
    std::sort(gaps.begin(), gaps.end());
    const double median_gap = gaps[gaps.size() / 2];
    const double span = d.back() - d.front();
    const double lambda_min = 2.0 * median_gap;
    const double lambda_max = 2.0 * span;
    if (lambda_min > 0.0 && lambda_max > lambda_min) {
      auto seed =
          periodogram_seed(series, out.constant.params[0], lambda_min,
                           lambda_max);
      // Keep the seed strictly inside the bounds so the finite-difference
      // Jacobian has headroom at the initial point.
      seed.wavelength = std::clamp(seed.wavelength, lambda_min * (1 + 1e-6),
                                   lambda_max * (1 - 1e-6));
      const double two_pi = 2.0 * std::numbers::pi;
      // Wavelength bounded during fitting; out-of-range trials are
      // rejected via NaN so damping retreats.
      const fitting::ModelFn sin_model =
          [two_pi, lambda_min, lambda_max](double x,
                                           std::span<const double> th) {
            if (!(th[2] >= lambda_min) || !(th[2] <= lambda_max)) return nan;
            return th[0] + th[1] * std::sin(two_pi * x / th[2] + th[3]);
          };
      out.sinusoid = fitting::weighted_nls_fit(
          data, sin_model,
          {out.constant.params[0], seed.amplitude, seed.wavelength,
           seed.phase});
      out.sinusoid.param_names = {"c", "amplitude", "wavelength", "phase"};
    } else {
      out.sinusoid.converged = false;
      out.sinusoid.message = "degenerate distance grid; sinusoid fit skipped";
    }
  } else {
    out.sinusoid.converged = false;
    out.sinusoid.message = "sinusoid fit requires at least 6 points";
  }

  out.delta_chi2_linear = out.constant.chi2 - out.linear.chi2;
  out.delta_chi2_sinusoid = out.sinusoid.params.empty()
                                ? nan
                                : out.constant.chi2 - out.sinusoid.chi2;
  return out;
}

}  // namespace capcal::vzero
