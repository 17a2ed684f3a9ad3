#include "capcal/calibration.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace capcal::calibration {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

double max_v_pzt(const CapacitanceSeries& series) {
  double vmax = -std::numeric_limits<double>::infinity();
  for (const auto& p : series.points) vmax = std::max(vmax, p.v_pzt);
  return vmax;
}

double mean_capacitance(const CapacitanceSeries& series) {
  double s = 0.0;
  for (const auto& p : series.points) s += p.capacitance;
  return s / static_cast<double>(series.points.size());
}

fitting::DataSeries to_data(const CapacitanceSeries& series) {
  fitting::DataSeries data;
  data.points.reserve(series.points.size());
  for (const auto& p : series.points) {
    data.points.push_back({p.v_pzt, p.capacitance,
                           series.has_sigma ? p.sigma : 1.0});
  }
  return data;
}

fitting::FitResult dispatch(const CapacitanceSeries& series,
                            const fitting::ModelFn& model,
                            std::vector<double> init,
                            const std::vector<bool>& mask,
                            const fitting::JacobianFn& jacobian) {
  if (series.points.empty()) {
    throw std::invalid_argument("empty capacitance series");
  }
  const auto data = to_data(series);
  if (series.has_sigma) {
    return fitting::weighted_nls_fit(data, model, std::move(init), mask, {},
                                     jacobian);
  }
  return fitting::unweighted_fit(data, model, std::move(init), mask, {},
                                 jacobian);
}

}  // namespace

double distance_map(double v_pzt, const PztMap& map) {
  if (!(map.beta > 0.0)) throw std::domain_error("beta must be > 0");
  const double d = map.beta * (map.v0_pzt - v_pzt);
  if (!(d > 0.0)) {
    throw std::domain_error("non-positive gap for v_pzt = " +
                            std::to_string(v_pzt) + " V (v0_pzt = " +
                            std::to_string(map.v0_pzt) + " V)");
  }
  return d;
}

fitting::FitResult fit_ideal(const CapacitanceSeries& series,
                             const models::IdealGeometry& geom,
                             const PztMap& map_init, bool constrain_a2) {
  models::validate(geom);
  const double beta = map_init.beta;
  const double radius = geom.radius;
  // theta = (A1, A2, A3, v0_pzt)
  const fitting::ModelFn model = [beta, radius](double v,
                                                std::span<const double> th) {
    const double d = beta * (th[3] - v);
    if (!(d > 0.0)) return nan;
    return th[0] + th[1] * d + th[2] * std::log(radius / d);
  };
  const fitting::JacobianFn jac = [beta, radius](double v,
                                                 std::span<const double> th,
                                                 std::span<double> out) {
    const double d = beta * (th[3] - v);
    out[0] = 1.0;
    out[1] = d;
    out[2] = std::log(radius / d);
    out[3] = beta * (th[1] - th[2] / d);
  };
  std::vector<double> init = {mean_capacitance(series), 0.0,
                              models::theoretical_a3(geom),
                              max_v_pzt(series) + 2.0};
  auto res = dispatch(series, model, std::move(init),
                      {false, constrain_a2, false, false}, jac);
  res.param_names = {"A1", "A2", "A3", "v0_pzt"};
  return res;
}

fitting::FitResult fit_modified(const CapacitanceSeries& series,
                                const models::ModifiedGeometry& geom,
                                const PztMap& map_init, bool constrain_a2) {
  models::validate(geom);
  const double beta = map_init.beta;
  // theta = (A1, A2, s, v0_pzt)
  const fitting::ModelFn model = [beta, geom](double v,
                                              std::span<const double> th) {
    const double d = beta * (th[3] - v);
    if (!(d > 0.0)) return nan;
    return th[2] * models::modified_geometric_capacitance(d, geom) + th[0] +
           th[1] * d;
  };
  const fitting::JacobianFn jac = [beta, geom](double v,
                                               std::span<const double> th,
                                               std::span<double> out) {
    const double d = beta * (th[3] - v);
    out[0] = 1.0;
    out[1] = d;
    out[2] = models::modified_geometric_capacitance(d, geom);
    out[3] =
        beta * (th[1] + th[2] * models::modified_geometric_derivative(d, geom));
  };
  const double v0_init = max_v_pzt(series) + 2.0;
  double geom_mean = 0.0;
  for (const auto& p : series.points) {
    geom_mean += models::modified_geometric_capacitance(
        beta * (v0_init - p.v_pzt), geom);
  }
  geom_mean /= static_cast<double>(series.points.size());
  std::vector<double> init = {mean_capacitance(series) - geom_mean, 0.0, 1.0,
                              v0_init};
  auto res = dispatch(series, model, std::move(init),
                      {false, constrain_a2, false, false}, jac);
  res.param_names = {"A1", "A2", "scale", "v0_pzt"};
  return res;
}

fitting::FitResult fit_powerlaw(const CapacitanceSeries& series,
                                const PztMap& map_init,
                                std::optional<double> p_fixed,
                                bool constrain_a2) {
  const double beta = map_init.beta;
  // theta = (A1, A2, A3, p, v0_pzt)
  const fitting::ModelFn model = [beta](double v, std::span<const double> th) {
    const double d = beta * (th[4] - v);
    if (!(d > 0.0) || !std::isfinite(th[3])) return nan;
    return th[0] + th[1] * d + th[2] * std::pow(d, th[3]);
  };
  const fitting::JacobianFn jac = [beta](double v, std::span<const double> th,
                                         std::span<double> out) {
    const double d = beta * (th[4] - v);
    const double dp = std::pow(d, th[3]);
    out[0] = 1.0;
    out[1] = d;
    out[2] = dp;
    out[3] = th[2] * dp * std::log(d);
    out[4] = beta * (th[1] + th[2] * th[3] * dp / d);
  };

  const double v0_init = max_v_pzt(series) + 2.0;
  const double p_init = p_fixed.value_or(0.3);

  // The model is linear in (A1, A2, A3) at fixed (p, v0): seed them with a
  // least-squares pre-solve so the scale of A3 (which spans many orders of
  // magnitude with p) starts in the right regime.
  const size_t n = series.points.size();
  const int ncol = constrain_a2 ? 2 : 3;
  Eigen::MatrixXd design(static_cast<Eigen::Index>(n), ncol);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
  for (size_t i = 0; i < n; ++i) {
    const double d = beta * (v0_init - series.points[i].v_pzt);
    if (!(d > 0.0)) {
      throw std::domain_error("initial v0_pzt produces non-positive gap");
    }
    const auto row = static_cast<Eigen::Index>(i);
    design(row, 0) = 1.0;
    if (constrain_a2) {
      design(row, 1) = std::pow(d, p_init);
    } else {
      design(row, 1) = d;
      design(row, 2) = std::pow(d, p_init);
    }
    rhs(row) = series.points[i].capacitance;
  }
  Eigen::VectorXd lin = design.colPivHouseholderQr().solve(rhs);
  std::vector<double> init(5);
  init[0] = lin(0);
  init[1] = constrain_a2 ? 0.0 : lin(1);
  init[2] = constrain_a2 ? lin(1) : lin(2);
  init[3] = p_init;
  init[4] = v0_init;

  auto res = dispatch(series, model, std::move(init),
                      {false, constrain_a2, false, p_fixed.has_value(), false},
                      jac);
  res.param_names = {"A1", "A2", "A3", "p", "v0_pzt"};
  return res;
}

double scale_discrepancy(const fitting::FitResult& modified_fit) {
  if (modified_fit.params.size() != 4) {
    throw std::invalid_argument("expected a fit_modified result");
  }
  return std::abs(1.0 - modified_fit.params[2]);
}

std::vector<ExponentRow> exponent_report(const models::Geometry& geom,
                                         double d_min, double d_max,
                                         int n_points) {
  if (!(d_min > 0.0) || !(d_max > d_min)) {
    throw std::domain_error("exponent report requires 0 < d_min < d_max");
  }
  if (n_points < 2) {
    throw std::invalid_argument("exponent report requires n_points >= 2");
  }
  std::vector<ExponentRow> rows;
  rows.reserve(static_cast<size_t>(n_points));
  const double log_min = std::log(d_min);
  const double step = (std::log(d_max) - log_min) / (n_points - 1);
  for (int i = 0; i < n_points; ++i) {
    const double d = std::exp(log_min + step * i);
    ExponentRow row;
    row.d = d;
    row.exponent_cdd = models::local_scaling_exponent(
        d, geom, models::ScalingQuantity::second_derivative);
    row.exponent_kel = models::local_scaling_exponent(
        d, geom, models::ScalingQuantity::curvature_coefficient);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace capcal::calibration
