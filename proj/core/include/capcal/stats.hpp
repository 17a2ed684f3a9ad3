#pragma once

namespace capcal::stats {

/// Regularized upper incomplete gamma Q(a, x).
double gamma_q(double a, double x);

/// Survival probability P(X >= chi2) for a chi-squared variable with
/// dof degrees of freedom.
double chi2_survival(double chi2, int dof);

}  // namespace capcal::stats
