#include "capcal/synthgen.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "capcal/rng.hpp"

namespace capcal::synthgen {

double eval(const CapacitanceModel& model, double d) {
  return std::visit(
      [d](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, IdealModel>) {
          return models::ideal_capacitance(d, m.geom, m.nuis, m.a3);
        } else if constexpr (std::is_same_v<T, ModifiedModel>) {
          return m.scale * models::modified_geometric_capacitance(d, m.geom) +
                 m.nuis.a1 + m.nuis.a2 * d;
        } else {
          if (!(d > 0.0)) throw std::domain_error("power law requires d > 0");
          return m.params.a1 + m.params.a2 * d +
                 m.params.a3 * std::pow(d, m.params.p);
        }
      },
      model);
}

calibration::CapacitanceSeries gen_capacitance(
    const CapacitanceModel& model, const calibration::PztMap& map,
    const std::vector<double>& v_grid, const NoiseSpec& noise) {
  if (noise.sigma < 0.0) throw std::domain_error("noise sigma must be >= 0");
  SplitMix64 rng(noise.seed);
  calibration::CapacitanceSeries series;
  series.has_sigma = noise.sigma > 0.0;
  series.points.reserve(v_grid.size());
  for (double v : v_grid) {
    const double d = calibration::distance_map(v, map);
    const double y = eval(model, d);
    const double sigma =
        noise.relative ? noise.sigma * std::abs(y) : noise.sigma;
    const double value =
        series.has_sigma ? y + sigma * rng.next_gaussian() : y;
    series.points.push_back({v, value, sigma});
  }
  return series;
}

double eval(const VZeroProfile& profile, double d) {
  return std::visit(
      [d](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ConstantProfile>) {
          return p.value;
        } else if constexpr (std::is_same_v<T, LinearProfile>) {
          return p.intercept + p.slope * d;
        } else {
          return p.offset +
                 p.amplitude *
                     std::sin(2.0 * std::numbers::pi * d / p.wavelength +
                              p.phase);
        }
      },
      profile);
}

vzero::VZeroSeries gen_vzero(const VZeroProfile& profile,
                             const std::vector<double>& d_grid,
                             double quoted_sigma, double true_scatter,
                             std::uint64_t seed) {
  if (!(quoted_sigma > 0.0)) {
    throw std::domain_error("quoted sigma must be > 0");
  }
  if (true_scatter < 0.0) {
    throw std::domain_error("true scatter must be >= 0");
  }
  SplitMix64 rng(seed);
  vzero::VZeroSeries series;
  series.points.reserve(d_grid.size());
  for (double d : d_grid) {
    const double v0 = eval(profile, d) + true_scatter * rng.next_gaussian();
    series.points.push_back({d, v0, quoted_sigma});
  }
  return series;
}

}  // namespace capcal::synthgen
