#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "capcal/calibration.hpp"
#include "capcal/models.hpp"
#include "capcal/vzero.hpp"

/// Seeded synthetic-data generation for capacitance runs and contact-
/// potential series. Output is a pure function of (seed, spec): byte-
/// identical across runs, platforms, and thread counts.
namespace capcal::synthgen {

/// Gaussian noise, absolute or relative to the model value.
struct NoiseSpec {
  double sigma = 0.0;       // >= 0; 0 produces an exact, unweighted series
  bool relative = false;    // sigma is a fraction of |model value|
  std::uint64_t seed = 0;
};

struct IdealModel {
  models::IdealGeometry geom;
  models::AffineNuisance nuis;
  double a3;
};

struct ModifiedModel {
  models::ModifiedGeometry geom;
  models::AffineNuisance nuis;
  double scale = 1.0;
};

struct PowerLawModel {
  calibration::PowerLawParams params;
};

using CapacitanceModel = std::variant<IdealModel, ModifiedModel, PowerLawModel>;

/// Evaluates the generating model at gap d.
double eval(const CapacitanceModel& model, double d);

/// y_i = model(d(v_i)) + eps_i with eps_i ~ N(0, sigma_i^2); the series
/// records the generating sigma. Grid voltages must all map to d > 0.
calibration::CapacitanceSeries gen_capacitance(
    const CapacitanceModel& model, const calibration::PztMap& map,
    const std::vector<double>& v_grid, const NoiseSpec& noise);

struct ConstantProfile {
  double value;  // V
};
struct LinearProfile {
  double intercept;  // V
  double slope;      // V/m
};
struct SinusoidProfile {
  double offset;      // V
  double amplitude;   // V
  double wavelength;  // m
  double phase;       // rad
};

using VZeroProfile =
    std::variant<ConstantProfile, LinearProfile, SinusoidProfile>;

double eval(const VZeroProfile& profile, double d);

/// v0_i = profile(d_i) + eps_i with eps_i ~ N(0, true_scatter^2); the
/// sigma column is filled with quoted_sigma, so quoted errors and true
/// scatter can disagree the way the measured series do.
vzero::VZeroSeries gen_vzero(const VZeroProfile& profile,
                             const std::vector<double>& d_grid,
                             double quoted_sigma, double true_scatter,
                             std::uint64_t seed);

}  // namespace capcal::synthgen
