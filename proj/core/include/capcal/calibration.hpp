#pragma once

#include <optional>
#include <vector>

#include "capcal/fitting.hpp"
#include "capcal/models.hpp"

/// Capacitance-calibration workflows: the PZT voltage to distance map,
/// the ideal / modified / power-law capacitance fits, and the local
/// scaling-exponent report.
namespace capcal::calibration {

/// Linear actuator map d = beta * (v0_pzt - v_pzt). beta is an
/// independently calibrated input, never a fit parameter (it is
/// degenerate with v0_pzt if both float).
struct PztMap {
  double beta;     // m/V, > 0
  double v0_pzt;   // V, contact-voltage intercept
};

/// Measured capacitance run. sigma <= 0 entries are not allowed; a series
/// without uncertainties carries has_sigma = false and routes to the
/// unweighted engine.
struct CapacitanceSeries {
  struct Point {
    double v_pzt;        // V
    double capacitance;  // F
    double sigma;        // F; ignored when has_sigma is false
  };
  std::vector<Point> points;
  bool has_sigma = true;
};

/// Power-law model A1 + A2 d + A3 d^p. A3 carries units F/m^p; the
/// exponent p is dimensionless (0.3 reproduces the stepped-sphere
/// approximation).
struct PowerLawParams {
  double a1;  // F
  double a2;  // F/m
  double a3;  // F/m^p
  double p;
};

double distance_map(double v_pzt, const PztMap& map);

/// Fit of C(v) = A1 + A2 d(v) + A3 ln(R/d(v)) over (A1, A2, A3, v0_pzt),
/// with A2 optionally frozen at zero. beta stays fixed; analytic
/// Jacobians. Parameter order in the result: A1, A2, A3, v0_pzt.
fitting::FitResult fit_ideal(const CapacitanceSeries& series,
                             const models::IdealGeometry& geom,
                             const PztMap& map_init, bool constrain_a2);

/// Fit of C(v) = s * C_geom(d(v)) + A1 + A2 d(v) where C_geom is the
/// stepped-sphere geometric capacitance; the single scale s carries the
/// distance-dependence coefficient, and |1 - s| is the coefficient
/// discrepancy. Parameter order: A1, A2, s, v0_pzt.
fitting::FitResult fit_modified(const CapacitanceSeries& series,
                                const models::ModifiedGeometry& geom,
                                const PztMap& map_init, bool constrain_a2);

/// Fit of C(v) = A1 + A2 d(v) + A3 d(v)^p; p is frozen when p_fixed is
/// supplied. Parameter order: A1, A2, A3, p, v0_pzt.
fitting::FitResult fit_powerlaw(const CapacitanceSeries& series,
                                const PztMap& map_init,
                                std::optional<double> p_fixed,
                                bool constrain_a2);

/// Coefficient discrepancy |1 - s| of a fit_modified result.
double scale_discrepancy(const fitting::FitResult& modified_fit);

struct ExponentRow {
  double d;             // m
  double exponent_cdd;  // local exponent of C''
  double exponent_kel;  // local exponent of k_el (identical by construction)
};

/// Local scaling exponents on a log-spaced distance grid.
std::vector<ExponentRow> exponent_report(const models::Geometry& geom,
                                         double d_min, double d_max,
                                         int n_points);

}  // namespace capcal::calibration
