#pragma once

#include <utility>
#include <vector>

#include "capcal/fitting.hpp"

/// Contact-potential series analysis: the weighted constancy test,
/// error-bar inflation, scatter-vs-quoted-error comparison, and the
/// constant / linear / sinusoid trend fits.
namespace capcal::vzero {

/// (distance, minimizing potential, quoted 1-sigma uncertainty) samples.
struct VZeroSeries {
  struct Point {
    double distance;  // m
    double v0;        // V
    double sigma;     // V, > 0
  };
  std::vector<Point> points;
};

struct ConstancyReport {
  double weighted_mean;       // V
  double unweighted_mean;     // V (the paper does not say which it quotes;
                              //    both are reported)
  double mean_std_error;      // V, error of the weighted mean
  double chi2;
  int dof;
  double chi2_red;
  double survival_prob;       // P(chi^2 >= observed) under constancy
  double sample_std;          // V, Bessel (N-1) standard deviation of v0
  double mean_sigma;          // V, arithmetic mean of the quoted sigmas
  double inflation_factor;    // sqrt(chi2_red)
  double inflated_mean_sigma; // inflation_factor * mean_sigma
  double rel_err_before;      // percent, mean_sigma / |weighted_mean|
  double rel_err_after;       // percent, inflated counterpart
  bool degenerate_inflation;  // chi2 == 0, inflation meaningless
};

/// Fills the derived ConstancyReport fields (reduced chi^2, inflation
/// factor, inflated error bar, relative errors) from the base statistics.
/// Exposed separately so the inflation arithmetic has a single home.
ConstancyReport constancy_from_stats(double chi2, int dof,
                                     double weighted_mean,
                                     double mean_std_error, double sample_std,
                                     double mean_sigma,
                                     double unweighted_mean);

/// Weighted constant fit of the series plus the scatter statistics.
ConstancyReport constancy_test(const VZeroSeries& series);

/// (before, after) relative errors in percent. Throws on zero mean.
std::pair<double, double> relative_errors(const ConstancyReport& report);

struct ScatterComparison {
  double sample_std;  // V
  double mean_sigma;  // V
  double ratio;       // sample_std / mean_sigma; >> 1 flags underestimated bars
};

ScatterComparison scatter_comparison(const VZeroSeries& series);

/// Returns a copy with every sigma multiplied by factor (> 0).
VZeroSeries inflate_errors(const VZeroSeries& series, double factor);

struct TrendFits {
  fitting::FitResult constant;  // identical to fitting::constant_fit
  fitting::FitResult linear;    // a + b*d over (a, b)
  fitting::FitResult sinusoid;  // c + A*sin(2*pi*d/lambda + phi)
  double delta_chi2_linear;     // chi2(constant) - chi2(linear)
  double delta_chi2_sinusoid;   // chi2(constant) - chi2(sinusoid)
};

/// Constant, linear, and sinusoid fits. The sinusoid is initialized from
/// the dominant frequency of a coarse periodogram and its wavelength is
/// bounded to [2 * median spacing, 2 * span]; its non-convergence is
/// reported in the FitResult, never fatal.
TrendFits trend_fits(const VZeroSeries& series);

}  // namespace capcal::vzero
