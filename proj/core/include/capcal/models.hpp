#pragma once

#include <stdexcept>
#include <variant>

/// Closed-form sphere-plane capacitance models (ideal single-curvature
/// sphere and the stepped multi-curvature variant), their analytic
/// distance derivatives, and the electrostatic curvature coefficient.
///
/// All quantities are strictly SI: meters, farads, kilograms. Unit
/// conversion to experimentalists' units (pF, nm, mV) happens only at
/// the I/O boundary.
namespace capcal::models {

/// Vacuum permittivity, F/m (2018 CODATA).
inline constexpr double epsilon0 = 8.8541878128e-12;

/// Single radius of curvature sphere.
struct IdealGeometry {
  double radius;  // m, > 0
};

/// Sphere whose surface combines regions of different curvature:
/// outer radius radius_ab, near-contact radius radius_cd, joined by a
/// step of height step_height with an offset at the contact point.
struct ModifiedGeometry {
  double radius;       // m, main sphere radius R
  double radius_ab;    // m, outer-region radius R_AB
  double radius_cd;    // m, near-contact radius R_CD
  double step_height;  // m, H
  double offset;       // m, h
};

/// Affine nuisance term A1 + A2*d absorbed by every capacitance fit.
struct AffineNuisance {
  double a1 = 0.0;  // F
  double a2 = 0.0;  // F/m
};

/// Effective oscillator mass entering the curvature coefficient.
struct EffectiveMass {
  double m_eff;  // kg, > 0
};

void validate(const IdealGeometry& g);
void validate(const ModifiedGeometry& g);

/// C_id(d) = A1 + A2*d + A3*ln(R/d).
double ideal_capacitance(double d, const IdealGeometry& geom,
                         const AffineNuisance& nuis, double a3);

/// Theoretical ideal log coefficient, -2*pi*eps0*R.
double theoretical_a3(const IdealGeometry& geom);

/// The purely geometric part of the modified-sphere capacitance,
/// 2*pi*eps0 * [ R_CD ln(R_CD/d)
///            + (R_AB-R_CD) ln((R_AB-R_CD)/(d+h))
///            - (R_AB-R)    ln((R_AB-R)/(d+h+H)) ],
/// with the convention 0*ln(0/x) = 0 when a radius difference vanishes.
double modified_geometric_capacitance(double d, const ModifiedGeometry& geom);

/// Geometric part plus the affine nuisance.
double modified_capacitance(double d, const ModifiedGeometry& geom,
                            const AffineNuisance& nuis);

/// d/dd of the geometric part (used by analytic fit Jacobians).
double modified_geometric_derivative(double d, const ModifiedGeometry& geom);

/// Second distance derivative of the capacitance, F/m^2.
/// Ideal: 2*pi*eps0*R/d^2 (magnitude of the geometric term; the affine
/// part contributes nothing).
double capacitance_second_derivative(double d, const IdealGeometry& geom);
double capacitance_second_derivative(double d, const ModifiedGeometry& geom);

using Geometry = std::variant<IdealGeometry, ModifiedGeometry>;
double capacitance_second_derivative(double d, const Geometry& geom);

/// k_el = C'' / (8 pi^2 m_eff).
double curvature_coefficient(double d, const Geometry& geom,
                             const EffectiveMass& m);

enum class ScalingQuantity { second_derivative, curvature_coefficient };
enum class ExponentMethod { analytic, finite_difference };

/// Local power-law exponent d*f'(d)/f(d) of C'' (or of k_el, which has
/// the identical exponent). The analytic and centered log-log
/// finite-difference paths (relative step 1e-3) agree to 1e-4; the
/// ideal geometry returns exactly -2 on the analytic path.
double local_scaling_exponent(
    double d, const Geometry& geom,
    ScalingQuantity quantity = ScalingQuantity::second_derivative,
    ExponentMethod method = ExponentMethod::analytic);

}  // namespace capcal::models
