// Command-line front end for the sphere-plane electrostatic calibration
// toolkit: capacitance-model fits, contact-potential constancy tests,
// scaling-exponent tables, and seeded synthetic data generation.
//
// Exit codes: 0 success, 1 analysis non-convergence, 2 input/config errors.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>

#include "capcal/calibration.hpp"
#include "capcal/io.hpp"
#include "capcal/models.hpp"
#include "capcal/synthgen.hpp"
#include "capcal/vzero.hpp"

namespace {

using json = nlohmann::ordered_json;
namespace models = capcal::models;
namespace calibration = capcal::calibration;
namespace vzero = capcal::vzero;
namespace synthgen = capcal::synthgen;

constexpr int exit_ok = 0;
constexpr int exit_nonconvergence = 1;
constexpr int exit_input_error = 2;

constexpr double pf = 1e-12;
constexpr double nm = 1e-9;
constexpr double um = 1e-6;
constexpr double mm = 1e-3;
constexpr double mv = 1e-3;

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

void emit_report(const std::string& path, json& report, bool no_timestamp) {
  report["schema_version"] = 1;
  if (!no_timestamp) report["generated_at"] = utc_timestamp();
  const std::string text = report.dump(2) + "\n";
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    capcal::io::atomic_write(path, text);
  }
}

// Shared geometry/map options with the paper's defaults.
struct GeometryOptions {
  double radius_mm = 30.9;
  double rab_mm = 49.4;
  double rcd_um = 30.0;
  double step_h_nm = 250.0;
  double offset_h_nm = 8.0;
  double beta_nm_per_v = 87.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--radius-mm", radius_mm, "Sphere radius R [mm]");
    cmd->add_option("--rab-mm", rab_mm, "Outer-region radius R_AB [mm]");
    cmd->add_option("--rcd-um", rcd_um, "Near-contact radius R_CD [um]");
    cmd->add_option("--H-nm", step_h_nm, "Step height H [nm]");
    cmd->add_option("--h-nm", offset_h_nm, "Offset h [nm]");
    cmd->add_option("--beta-nm-per-v", beta_nm_per_v,
                    "PZT actuation coefficient beta [nm/V]");
  }
  models::IdealGeometry ideal() const { return {radius_mm * mm}; }
  models::ModifiedGeometry modified() const {
    return {radius_mm * mm, rab_mm * mm, rcd_um * um, step_h_nm * nm,
            offset_h_nm * nm};
  }
  double beta() const { return beta_nm_per_v * nm; }
};

// Display-unit scale factor per fitted parameter. Power-law A3 is
// reported in pF * m^-p; see the README note on the exponent-coefficient
// units.
struct ParamUnit {
  std::string unit;
  double scale;  // SI value / scale = display value
};

ParamUnit param_unit(const std::string& name, const std::string& model,
                     double p_exponent) {
  if (name == "A1") return {"pF", pf};
  if (name == "A2") return {"pF/m", pf};
  if (name == "A3") {
    if (model == "ideal") return {"pF", pf};
    std::ostringstream os;
    os << "pF m^-" << p_exponent;
    return {os.str(), pf};
  }
  if (name == "v0_pzt") return {"V", 1.0};
  return {"", 1.0};  // scale, p: dimensionless
}

json fit_to_json(const capcal::fitting::FitResult& fit,
                 const std::string& model) {
  json j;
  j["model"] = model;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  if (!fit.message.empty()) j["message"] = fit.message;
  j["chi2"] = fit.chi2;
  j["dof"] = fit.dof;
  j["chi2_red"] = fit.chi2_red;
  j["residual_scaled"] = fit.residual_scaled;

  const double p_exp =
      model == "powerlaw" && fit.params.size() == 5 ? fit.params[3] : 0.0;
  json params = json::array();
  std::vector<double> scales;
  for (size_t i = 0; i < fit.params.size(); ++i) {
    const auto& name = fit.param_names[i];
    const auto unit = param_unit(name, model, p_exp);
    scales.push_back(unit.scale);
    json jp;
    jp["name"] = name;
    jp["value"] = fit.params[i] / unit.scale;
    if (!fit.std_errors.empty()) {
      jp["std_error"] = fit.std_errors[i] / unit.scale;
    }
    jp["unit"] = unit.unit;
    params.push_back(jp);
  }
  j["params"] = params;
  if (!fit.covariance.empty()) {
    json cov = json::array();
    for (size_t a = 0; a < fit.covariance.size(); ++a) {
      json row = json::array();
      for (size_t b = 0; b < fit.covariance[a].size(); ++b) {
        row.push_back(fit.covariance[a][b] / (scales[a] * scales[b]));
      }
      cov.push_back(row);
    }
    j["covariance"] = cov;
  }
  return j;
}

int run_fit_cap(const std::string& input, const std::string& output,
                const std::string& model, const GeometryOptions& geo,
                bool constrain_a2, std::optional<double> p_fixed,
                bool no_timestamp) {
  const auto series = capcal::io::read_capacitance_csv(input);
  const calibration::PztMap map{geo.beta(), 0.0};

  capcal::fitting::FitResult fit;
  if (model == "ideal") {
    fit = calibration::fit_ideal(series, geo.ideal(), map, constrain_a2);
  } else if (model == "modified") {
    fit = calibration::fit_modified(series, geo.modified(), map, constrain_a2);
  } else {
    fit = calibration::fit_powerlaw(series, map, p_fixed, constrain_a2);
  }

  json report;
  report["command"] = "fit-cap";
  report["input"] = input;
  report["n_points"] = series.points.size();
  report["weighted"] = series.has_sigma;
  report["fit"] = fit_to_json(fit, model);
  if (model == "modified") {
    report["fit"]["scale_discrepancy_percent"] =
        100.0 * calibration::scale_discrepancy(fit);
  }

  // Residual / fitted-curve table: both raw and sigma-normalized
  // residuals, plus the fitted distance map.
  const double v0 = fit.params.back();
  const double beta = geo.beta();
  json table;
  json col_v = json::array(), col_d = json::array(), col_meas = json::array(),
       col_fit = json::array(), col_res = json::array(),
       col_res_sigma = json::array();
  for (const auto& pt : series.points) {
    const double d = beta * (v0 - pt.v_pzt);
    double fitted = std::numeric_limits<double>::quiet_NaN();
    if (d > 0.0) {
      if (model == "ideal") {
        fitted = models::ideal_capacitance(
            d, geo.ideal(), {fit.params[0], fit.params[1]}, fit.params[2]);
      } else if (model == "modified") {
        fitted = fit.params[2] *
                     models::modified_geometric_capacitance(d, geo.modified()) +
                 fit.params[0] + fit.params[1] * d;
      } else {
        fitted = fit.params[0] + fit.params[1] * d +
                 fit.params[2] * std::pow(d, fit.params[3]);
      }
    }
    const double res = pt.capacitance - fitted;
    col_v.push_back(pt.v_pzt);
    col_d.push_back(d / nm);
    col_meas.push_back(pt.capacitance / pf);
    col_fit.push_back(fitted / pf);
    col_res.push_back(res / pf);
    col_res_sigma.push_back(series.has_sigma
                                ? res / pt.sigma
                                : std::numeric_limits<double>::quiet_NaN());
  }
  table["v_pzt_V"] = col_v;
  table["d_nm"] = col_d;
  table["capacitance_pF"] = col_meas;
  table["fit_pF"] = col_fit;
  table["residual_pF"] = col_res;
  table["residual_over_sigma"] = col_res_sigma;
  report["residuals"] = table;

  emit_report(output, report, no_timestamp);
  return fit.converged ? exit_ok : exit_nonconvergence;
}

json trend_fit_json(const capcal::fitting::FitResult& fit,
                    const std::vector<std::string>& units,
                    const std::vector<double>& scales) {
  json j;
  j["converged"] = fit.converged;
  if (!fit.message.empty()) j["message"] = fit.message;
  if (fit.params.empty()) return j;
  j["chi2"] = fit.chi2;
  j["dof"] = fit.dof;
  j["chi2_red"] = fit.chi2_red;
  json params = json::array();
  for (size_t i = 0; i < fit.params.size(); ++i) {
    json jp;
    jp["name"] = fit.param_names[i];
    jp["value"] = fit.params[i] / scales[i];
    if (!fit.std_errors.empty()) jp["std_error"] = fit.std_errors[i] / scales[i];
    jp["unit"] = units[i];
    params.push_back(jp);
  }
  j["params"] = params;
  return j;
}

int run_v0_test(const std::string& input, const std::string& output,
                bool no_timestamp) {
  const auto series = capcal::io::read_vzero_csv(input);
  const auto report = vzero::constancy_test(series);
  const auto trends = vzero::trend_fits(series);

  json j;
  j["command"] = "v0-test";
  j["input"] = input;
  j["n_points"] = series.points.size();

  json c;
  c["weighted_mean_mV"] = report.weighted_mean / mv;
  c["unweighted_mean_mV"] = report.unweighted_mean / mv;
  c["mean_std_error_mV"] = report.mean_std_error / mv;
  c["chi2"] = report.chi2;
  c["dof"] = report.dof;
  c["chi2_red"] = report.chi2_red;
  c["survival_prob"] = report.survival_prob;
  c["sample_std_mV"] = report.sample_std / mv;
  c["mean_sigma_mV"] = report.mean_sigma / mv;
  c["scatter_to_quoted_ratio"] = report.sample_std / report.mean_sigma;
  c["inflation_factor"] = report.inflation_factor;
  c["inflated_mean_sigma_mV"] = report.inflated_mean_sigma / mv;
  c["rel_err_before_percent"] = report.rel_err_before;
  c["rel_err_after_percent"] = report.rel_err_after;
  c["degenerate_inflation"] = report.degenerate_inflation;
  j["constancy"] = c;

  json t;
  t["constant"] = trend_fit_json(trends.constant, {"mV"}, {mv});
  t["linear"] =
      trend_fit_json(trends.linear, {"mV", "mV/um"}, {mv, mv / um});
  t["sinusoid"] = trend_fit_json(trends.sinusoid, {"mV", "mV", "nm", "rad"},
                                 {mv, mv, nm, 1.0});
  t["delta_chi2_linear_vs_constant"] = trends.delta_chi2_linear;
  if (std::isfinite(trends.delta_chi2_sinusoid)) {
    t["delta_chi2_sinusoid_vs_constant"] = trends.delta_chi2_sinusoid;
  }
  j["trends"] = t;

  emit_report(output, j, no_timestamp);
  // The sinusoid fit is allowed to fail; the linear fit is not.
  return trends.linear.converged ? exit_ok : exit_nonconvergence;
}

int run_exponents(const std::string& output, const GeometryOptions& geo,
                  bool ideal, double d_min_nm, double d_max_nm, int n) {
  const models::Geometry geom =
      ideal ? models::Geometry{geo.ideal()} : models::Geometry{geo.modified()};
  const auto rows =
      calibration::exponent_report(geom, d_min_nm * nm, d_max_nm * nm, n);
  std::ostringstream os;
  os << "d_nm,exponent_cdd,exponent_kel\n";
  char buf[96];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", row.d / nm,
                  row.exponent_cdd, row.exponent_kel);
    os << buf;
  }
  if (output.empty() || output == "-") {
    std::cout << os.str();
  } else {
    capcal::io::atomic_write(output, os.str());
  }
  return exit_ok;
}

std::vector<double> make_grid(double lo, double hi, int n, bool log_spaced) {
  std::vector<double> grid;
  grid.reserve(static_cast<size_t>(n));
  if (n == 1) {
    grid.push_back(lo);
    return grid;
  }
  if (log_spaced) {
    const double l0 = std::log(lo), step = (std::log(hi) - l0) / (n - 1);
    for (int i = 0; i < n; ++i) grid.push_back(std::exp(l0 + step * i));
  } else {
    const double step = (hi - lo) / (n - 1);
    for (int i = 0; i < n; ++i) grid.push_back(lo + step * i);
  }
  return grid;
}

struct SynthOptions {
  std::string kind = "capacitance";
  std::string model = "ideal";
  std::string profile = "constant";
  std::string grid = "log";
  int n = 500;
  double d_min_nm = 20.0;
  double d_max_nm = 1000.0;
  double v0_pzt_v = 69.31;
  double a1_pf = 0.0;
  double a2_pf_per_m = 0.0;
  double a3_pf = -1.757;
  double p = 0.3;
  double scale = 1.0;
  double noise_rel = 0.0;
  double noise_abs_pf = 0.0;
  std::uint64_t seed = 0;
  // vzero profile parameters
  double mean_mv = 15.29;
  double slope_mv_per_um = 0.0;
  double amp_mv = 0.0;
  double wavelength_nm = 1000.0;
  double phase_rad = 0.0;
  double quoted_sigma_mv = 0.13;
  double true_scatter_mv = 0.13;
};

int run_synth(const std::string& output, const GeometryOptions& geo,
              const SynthOptions& opt) {
  const auto d_grid = make_grid(opt.d_min_nm * nm, opt.d_max_nm * nm, opt.n,
                                opt.grid == "log");
  if (opt.kind == "capacitance") {
    synthgen::CapacitanceModel model;
    const models::AffineNuisance nuis{opt.a1_pf * pf, opt.a2_pf_per_m * pf};
    if (opt.model == "ideal") {
      model = synthgen::IdealModel{geo.ideal(), nuis, opt.a3_pf * pf};
    } else if (opt.model == "modified") {
      model = synthgen::ModifiedModel{geo.modified(), nuis, opt.scale};
    } else {
      model = synthgen::PowerLawModel{
          {nuis.a1, nuis.a2, opt.a3_pf * pf, opt.p}};
    }
    const calibration::PztMap map{geo.beta(), opt.v0_pzt_v};
    std::vector<double> v_grid;
    v_grid.reserve(d_grid.size());
    for (double d : d_grid) v_grid.push_back(opt.v0_pzt_v - d / geo.beta());
    synthgen::NoiseSpec noise;
    if (opt.noise_rel > 0.0 && opt.noise_abs_pf > 0.0) {
      throw CLI::ValidationError(
          "--noise-rel and --noise-abs-pf are mutually exclusive");
    }
    if (opt.noise_rel > 0.0) {
      noise = {opt.noise_rel, true, opt.seed};
    } else {
      noise = {opt.noise_abs_pf * pf, false, opt.seed};
    }
    const auto series = synthgen::gen_capacitance(model, map, v_grid, noise);
    capcal::io::write_capacitance_csv(output, series);
  } else {
    synthgen::VZeroProfile profile;
    if (opt.profile == "constant") {
      profile = synthgen::ConstantProfile{opt.mean_mv * mv};
    } else if (opt.profile == "linear") {
      profile = synthgen::LinearProfile{opt.mean_mv * mv,
                                        opt.slope_mv_per_um * mv / um};
    } else {
      profile = synthgen::SinusoidProfile{opt.mean_mv * mv, opt.amp_mv * mv,
                                          opt.wavelength_nm * nm,
                                          opt.phase_rad};
    }
    const auto series =
        synthgen::gen_vzero(profile, d_grid, opt.quoted_sigma_mv * mv,
                            opt.true_scatter_mv * mv, opt.seed);
    capcal::io::write_vzero_csv(output, series);
  }
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Sphere-plane electrostatic calibration toolkit: capacitance model "
      "fits, contact-potential statistics, scaling exponents, synthetic "
      "data"};
  app.require_subcommand(1);

  std::string input, output;
  bool no_timestamp = false;
  bool constrain_a2 = false, free_a2 = false;
  double p_fixed_value = 0.0;

  // fit-cap
  auto* fit_cmd = app.add_subcommand(
      "fit-cap", "Fit a capacitance model to a calibration run");
  std::string fit_model;
  GeometryOptions fit_geo;
  fit_cmd->add_option("--input", input, "Input CSV (v_pzt_V,capacitance_pF[,sigma_pF])")
      ->required();
  fit_cmd->add_option("--output", output, "JSON report path ('-' for stdout)");
  fit_cmd->add_option("--model", fit_model, "Capacitance model")
      ->required()
      ->check(CLI::IsMember({"ideal", "modified", "powerlaw"}));
  fit_geo.attach(fit_cmd);
  fit_cmd->add_flag("--constrain-a2", constrain_a2, "Freeze A2 at zero");
  fit_cmd->add_flag("--free-a2", free_a2, "Leave A2 free (default)");
  auto* p_fixed_opt = fit_cmd->add_option(
      "--p-fixed", p_fixed_value, "Freeze the power-law exponent at this value");
  fit_cmd->add_flag("--no-timestamp", no_timestamp,
                    "Omit the timestamp for byte-identical reports");

  // v0-test
  auto* v0_cmd = app.add_subcommand(
      "v0-test", "Contact-potential constancy test and trend fits");
  v0_cmd->add_option("--input", input, "Input CSV (distance_nm,v0_mV,sigma_mV)")
      ->required();
  v0_cmd->add_option("--output", output, "JSON report path ('-' for stdout)");
  v0_cmd->add_flag("--no-timestamp", no_timestamp,
                   "Omit the timestamp for byte-identical reports");

  // exponents
  auto* exp_cmd = app.add_subcommand(
      "exponents", "Local scaling-exponent table for C'' and k_el");
  GeometryOptions exp_geo;
  bool exp_ideal = false;
  double d_min_nm = 20.0, d_max_nm = 120.0;
  int exp_n = 25;
  exp_cmd->add_option("--output", output, "Output table path ('-' for stdout)");
  exp_geo.attach(exp_cmd);
  exp_cmd->add_flag("--ideal", exp_ideal,
                    "Use the ideal geometry instead of the modified one");
  exp_cmd->add_option("--d-min-nm", d_min_nm, "Grid start [nm]");
  exp_cmd->add_option("--d-max-nm", d_max_nm, "Grid end [nm]");
  exp_cmd->add_option("--n", exp_n, "Number of log-spaced grid points");

  // synth
  auto* synth_cmd = app.add_subcommand(
      "synth", "Generate a seeded synthetic series in the ingestion format");
  GeometryOptions synth_geo;
  SynthOptions synth;
  synth_cmd->add_option("--output", output, "Output CSV path")->required();
  synth_cmd->add_option("--kind", synth.kind, "Series kind")
      ->check(CLI::IsMember({"capacitance", "vzero"}));
  synth_cmd->add_option("--model", synth.model, "Generating capacitance model")
      ->check(CLI::IsMember({"ideal", "modified", "powerlaw"}));
  synth_cmd->add_option("--profile", synth.profile, "Generating V0 profile")
      ->check(CLI::IsMember({"constant", "linear", "sinusoid"}));
  synth_geo.attach(synth_cmd);
  synth_cmd->add_option("--n", synth.n, "Number of points")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--d-min-nm", synth.d_min_nm, "Grid start [nm]");
  synth_cmd->add_option("--d-max-nm", synth.d_max_nm, "Grid end [nm]");
  synth_cmd->add_option("--grid", synth.grid, "Grid spacing")
      ->check(CLI::IsMember({"log", "linear"}));
  synth_cmd->add_option("--v0-pzt-v", synth.v0_pzt_v,
                        "True contact-voltage intercept [V]");
  synth_cmd->add_option("--a1-pf", synth.a1_pf, "A1 [pF]");
  synth_cmd->add_option("--a2-pf-per-m", synth.a2_pf_per_m, "A2 [pF/m]");
  synth_cmd->add_option("--a3-pf", synth.a3_pf,
                        "A3 [pF for ideal, pF*m^-p for powerlaw]");
  synth_cmd->add_option("--p", synth.p, "Power-law exponent");
  synth_cmd->add_option("--scale", synth.scale,
                        "Modified-geometry overall scale s");
  synth_cmd->add_option("--noise-rel", synth.noise_rel,
                        "Relative Gaussian noise fraction");
  synth_cmd->add_option("--noise-abs-pf", synth.noise_abs_pf,
                        "Absolute Gaussian noise sigma [pF]");
  synth_cmd->add_option("--seed", synth.seed, "RNG seed");
  synth_cmd->add_option("--mean-mv", synth.mean_mv, "Profile mean/offset [mV]");
  synth_cmd->add_option("--slope-mv-per-um", synth.slope_mv_per_um,
                        "Linear profile slope [mV/um]");
  synth_cmd->add_option("--amp-mv", synth.amp_mv,
                        "Sinusoid amplitude [mV]");
  synth_cmd->add_option("--wavelength-nm", synth.wavelength_nm,
                        "Sinusoid wavelength [nm]");
  synth_cmd->add_option("--phase-rad", synth.phase_rad, "Sinusoid phase [rad]");
  synth_cmd->add_option("--quoted-sigma-mv", synth.quoted_sigma_mv,
                        "Quoted error bar [mV]");
  synth_cmd->add_option("--true-scatter-mv", synth.true_scatter_mv,
                        "True Gaussian scatter [mV]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_input_error;
  }

  try {
    if (fit_cmd->parsed()) {
      if (constrain_a2 && free_a2) {
        std::cerr << "error: --constrain-a2 and --free-a2 are mutually "
                     "exclusive\n";
        return exit_input_error;
      }
      std::optional<double> p_fixed;
      if (p_fixed_opt->count() > 0) p_fixed = p_fixed_value;
      return run_fit_cap(input, output, fit_model, fit_geo, constrain_a2,
                         p_fixed, no_timestamp);
    }
    if (v0_cmd->parsed()) {
      return run_v0_test(input, output, no_timestamp);
    }
    if (exp_cmd->parsed()) {
      return run_exponents(output, exp_geo, exp_ideal, d_min_nm, d_max_nm,
                           exp_n);
    }
    if (synth_cmd->parsed()) {
      return run_synth(output, synth_geo, synth);
    }
  } catch (const capcal::io::ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return exit_input_error;
  } catch (const CLI::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_input_error;
  } catch (const std::domain_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return exit_input_error;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return exit_input_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_nonconvergence;
  }
  return exit_ok;
}
