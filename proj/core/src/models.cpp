#include "capcal/models.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace capcal::models {

namespace {

constexpr double two_pi_eps0 = 2.0 * std::numbers::pi * epsilon0;

void require_positive_gap(double d) {
  if (!(d > 0.0)) {
    throw std::domain_error("sphere-plane gap must be positive, got d = " +
                            std::to_string(d) + " m");
  }
}

// coefficient * ln(coefficient / denom), with 0*ln(0/x) = 0.
double coef_log(double coef, double denom) {
  if (coef == 0.0) return 0.0;
  return coef * std::log(coef / denom);
}

}  // namespace

void validate(const IdealGeometry& g) {
  if (!(g.radius > 0.0)) throw std::domain_error("sphere radius must be > 0");
}

void validate(const ModifiedGeometry& g) {
  if (!(g.radius > 0.0 && g.radius_ab > 0.0 && g.radius_cd > 0.0 &&
        g.step_height > 0.0 && g.offset > 0.0)) {
    throw std::domain_error("all modified-geometry lengths must be > 0");
  }
  // >= rather than > so the degenerate R_CD = R_AB = R reduction (which
  // collapses to the ideal model under the 0*ln(0) convention) stays legal.
  if (g.radius_ab < g.radius || g.radius_ab < g.radius_cd) {
    throw std::domain_error("outer radius R_AB must dominate R and R_CD");
  }
}

double ideal_capacitance(double d, const IdealGeometry& geom,
                         const AffineNuisance& nuis, double a3) {
  validate(geom);
  require_positive_gap(d);
  return nuis.a1 + nuis.a2 * d + a3 * std::log(geom.radius / d);
}

double theoretical_a3(const IdealGeometry& geom) {
  validate(geom);
  return -two_pi_eps0 * geom.radius;
}

double modified_geometric_capacitance(double d, const ModifiedGeometry& geom) {
  validate(geom);
  require_positive_gap(d);
  const double r_out = geom.radius_ab - geom.radius_cd;
  const double r_in = geom.radius_ab - geom.radius;
  return two_pi_eps0 *
         (coef_log(geom.radius_cd, d) + coef_log(r_out, d + geom.offset) -
          coef_log(r_in, d + geom.offset + geom.step_height));
}

double modified_capacitance(double d, const ModifiedGeometry& geom,
                            const AffineNuisance& nuis) {
  return modified_geometric_capacitance(d, geom) + nuis.a1 + nuis.a2 * d;
}

double modified_geometric_derivative(double d, const ModifiedGeometry& geom) {
  validate(geom);
  require_positive_gap(d);
  const double r_out = geom.radius_ab - geom.radius_cd;
  const double r_in = geom.radius_ab - geom.radius;
  return two_pi_eps0 *
         (-geom.radius_cd / d - r_out / (d + geom.offset) +
          r_in / (d + geom.offset + geom.step_height));
}

double capacitance_second_derivative(double d, const IdealGeometry& geom) {
  validate(geom);
  require_positive_gap(d);
  return two_pi_eps0 * geom.radius / (d * d);
}

double capacitance_second_derivative(double d, const ModifiedGeometry& geom) {
  validate(geom);
  require_positive_gap(d);
  const double r_out = geom.radius_ab - geom.radius_cd;
  const double r_in = geom.radius_ab - geom.radius;
  const double dh = d + geom.offset;
  const double dhh = dh + geom.step_height;
  return two_pi_eps0 *
         (geom.radius_cd / (d * d) + r_out / (dh * dh) - r_in / (dhh * dhh));
}

double capacitance_second_derivative(double d, const Geometry& geom) {
  return std::visit(
      [d](const auto& g) { return capacitance_second_derivative(d, g); },
      geom);
}

double curvature_coefficient(double d, const Geometry& geom,
                             const EffectiveMass& m) {
  if (!(m.m_eff > 0.0)) throw std::domain_error("m_eff must be > 0");
  const double pi = std::numbers::pi;
  return capacitance_second_derivative(d, geom) / (8.0 * pi * pi * m.m_eff);
}

namespace {

// Third distance derivative of the capacitance, used for the analytic
// local exponent d*C'''/C''.
double third_derivative(double d, const ModifiedGeometry& geom) {
  const double r_out = geom.radius_ab - geom.radius_cd;
  const double r_in = geom.radius_ab - geom.radius;
  const double dh = d + geom.offset;
  const double dhh = dh + geom.step_height;
  return two_pi_eps0 * (-2.0 * geom.radius_cd / (d * d * d) -
                        2.0 * r_out / (dh * dh * dh) +
                        2.0 * r_in / (dhh * dhh * dhh));
}

}  // namespace

double local_scaling_exponent(double d, const Geometry& geom,
                              ScalingQuantity /*quantity*/,
                              ExponentMethod method) {
  // k_el is C'' over a d-independent constant, so both quantities share
  // the same local exponent.
  require_positive_gap(d);
  if (method == ExponentMethod::analytic) {
    if (std::holds_alternative<IdealGeometry>(geom)) {
      validate(std::get<IdealGeometry>(geom));
      return -2.0;
    }
    const auto& g = std::get<ModifiedGeometry>(geom);
    const double f = capacitance_second_derivative(d, g);
    if (!(f > 0.0)) {
      throw std::domain_error("C'' is not positive at the evaluation point");
    }
    return d * third_derivative(d, g) / f;
  }
  // Centered log-log finite difference at relative step 1e-3.
  const double eps = 1e-3;
  const double f_hi = capacitance_second_derivative(d * (1.0 + eps), geom);
  const double f_lo = capacitance_second_derivative(d * (1.0 - eps), geom);
  if (!(f_hi > 0.0) || !(f_lo > 0.0)) {
    throw std::domain_error("C'' is not positive at the evaluation point");
  }
  return std::log(f_hi / f_lo) / std::log((1.0 + eps) / (1.0 - eps));
}

}  // namespace capcal::models
