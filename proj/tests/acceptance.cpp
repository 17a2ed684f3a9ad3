// Acceptance suite: one line per criterion, PASS or FAIL, plus the
// measured quantities so a red line is diagnosable from the log alone.
// Exits nonzero when any criterion fails. argv[1] is the CLI binary path
// (used by the round-trip criterion).

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "capcal/calibration.hpp"
#include "capcal/io.hpp"
#include "capcal/models.hpp"
#include "capcal/synthgen.hpp"
#include "capcal/vzero.hpp"

namespace {

namespace models = capcal::models;
namespace calibration = capcal::calibration;
namespace vzero = capcal::vzero;
namespace synthgen = capcal::synthgen;
namespace fs = std::filesystem;

const models::IdealGeometry kSphere{30.9e-3};
const models::ModifiedGeometry kStepped{30.9e-3, 49.4e-3, 30e-6, 250e-9, 8e-9};
const calibration::PztMap kMap{87e-9, 69.31};

int failures = 0;

void report(int criterion, bool pass, const std::string& what) {
  std::printf("[%s] criterion %2d: %s\n", pass ? "PASS" : "FAIL", criterion,
              what.c_str());
  if (!pass) ++failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::vector<double> log_v_grid(double d_min, double d_max, int n,
                               const calibration::PztMap& map) {
  std::vector<double> v;
  const double l0 = std::log(d_min);
  const double step = (std::log(d_max) - l0) / (n - 1);
  for (int i = 0; i < n; ++i) {
    v.push_back(map.v0_pzt - std::exp(l0 + step * i) / map.beta);
  }
  return v;
}

// 1. Theoretical log coefficient for R = 30.9 mm.
void criterion_1() {
  const double a3 = models::theoretical_a3(kSphere);
  const bool pass = std::abs(a3 - (-1.719e-12)) < 0.0005e-12 &&
                    std::abs(a3 - (-1.72e-12)) / 1.72e-12 < 0.005;
  report(1, pass,
         "theoretical A3(R = 30.9 mm) = " + fmt(a3 / 1e-12) +
             " pF (expect -1.719 pF, within 0.5% of -1.72 pF)");
}

// 2. Constancy-test arithmetic on the headline statistics.
void criterion_2() {
  const auto r = vzero::constancy_from_stats(3603.0, 499, 15.29e-3, 6e-6,
                                             0.31e-3, 0.13e-3, 15.29e-3);
  const bool pass = std::abs(r.chi2_red - 7.22) < 0.005 &&
                    std::abs(r.inflated_mean_sigma - 0.349e-3) < 0.0005e-3 &&
                    std::abs(r.rel_err_before - 0.85) < 0.005 &&
                    r.rel_err_after >= 2.275 && r.rel_err_after < 2.295;
  report(2, pass,
         "chi2 = 3603 / dof = 499 -> chi2_red = " + fmt(r.chi2_red) +
             ", inflated sigma = " + fmt(r.inflated_mean_sigma / 1e-3) +
             " mV, relative errors " + fmt(r.rel_err_before) + "% -> " +
             fmt(r.rel_err_after) + "%");
}

// 3. Inflating by sqrt(chi2_red) drives chi2_red to exactly one.
void criterion_3() {
  std::vector<double> d_grid;
  for (int i = 0; i < 300; ++i) d_grid.push_back(160e-9 + 2e-8 * i);
  const auto series = synthgen::gen_vzero(synthgen::ConstantProfile{15.29e-3},
                                          d_grid, 0.13e-3, 0.31e-3, 77);
  const auto before = vzero::constancy_test(series);
  const auto after = vzero::constancy_test(
      vzero::inflate_errors(series, before.inflation_factor));
  const double dev = std::abs(after.chi2_red - 1.0);
  report(3, dev < 1e-12,
         "inflate by sqrt(chi2_red) then re-test: |chi2_red - 1| = " +
             fmt(dev) + " (require < 1e-12)");
}

// 4. Analytic second derivative vs centered finite differences.
void criterion_4() {
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double d = 1e-8 * std::pow(1e3, i / 19.0);
    const double h = 1e-3 * d;
    const auto fd = [&](auto&& f) {
      return (f(d + h) - 2.0 * f(d) + f(d - h)) / (h * h);
    };
    // C'' is the physical (positive) curvature; evaluate the log form
    // with the coefficient magnitude.
    const double fd_ideal = fd([&](double x) {
      return models::ideal_capacitance(
          x, kSphere, {}, std::abs(models::theoretical_a3(kSphere)));
    });
    const double fd_mod =
        fd([&](double x) { return models::modified_capacitance(x, kStepped, {}); });
    worst = std::max(
        worst, std::abs(models::capacitance_second_derivative(d, kSphere) /
                            fd_ideal -
                        1.0));
    worst = std::max(
        worst, std::abs(models::capacitance_second_derivative(d, kStepped) /
                            fd_mod -
                        1.0));
  }
  report(4, worst < 1e-6,
         "analytic C'' vs finite differences, 20 distances in [10 nm, 10 um], "
         "both geometries: worst relative deviation " +
             fmt(worst));
}

// 5. Local scaling exponents: ideal exactly -2; stepped sphere strictly
// inside (-2, -1.4) on [20, 120] nm.
void criterion_5() {
  bool ideal_ok = true;
  for (double d = 1e-8; d < 1e-3; d *= 10) {
    ideal_ok = ideal_ok &&
               models::local_scaling_exponent(d, models::Geometry{kSphere}) ==
                   -2.0;
  }
  double lo = 0.0, hi = -10.0;
  bool inside = true;
  for (int i = 0; i < 25; ++i) {
    const double d = 20e-9 * std::pow(6.0, i / 24.0);
    const double e =
        models::local_scaling_exponent(d, models::Geometry{kStepped});
    lo = std::min(lo, e);
    hi = std::max(hi, e);
    inside = inside && e > -2.0 && e < -1.4;
  }
  report(5, ideal_ok && inside,
         "ideal exponent exactly -2; stepped sphere in [20, 120] nm spans [" +
             fmt(lo) + ", " + fmt(hi) + "] (require inside (-2, -1.4))");
}

// 6. Free-exponent power-law fit to noiseless stepped-sphere data on
// [20 nm, 1 um].
void criterion_6() {
  const synthgen::ModifiedModel truth{kStepped, {0.0, 0.0}, 1.0};
  const auto grid = log_v_grid(20e-9, 1e-6, 500, kMap);
  const auto series = synthgen::gen_capacitance(truth, kMap, grid, {});
  const auto fit = calibration::fit_powerlaw(series, kMap, std::nullopt, false);
  const double p = fit.params[3];
  report(6, std::abs(p - 0.3) <= 0.15,
         "free-exponent power law on noiseless stepped-sphere data, "
         "[20 nm, 1 um]: p = " +
             fmt(p) + " (require 0.3 +/- 0.15)" +
             (fit.converged ? "" : "; fit did not converge"));
  // Informational: the quoted exponent is a good description only on the
  // anomalous range itself. A direct fit in distance space on [20, 120] nm
  // (actuator map held fixed) lands near it.
  const auto narrow_grid = log_v_grid(20e-9, 120e-9, 200, kMap);
  const auto narrow = synthgen::gen_capacitance(truth, kMap, narrow_grid, {});
  const auto narrow_fit =
      calibration::fit_powerlaw(narrow, kMap, std::nullopt, false);
  std::printf("       info   6: anomalous-range [20, 120] nm free fit gives "
              "p = %s\n",
              fmt(narrow_fit.params[3]).c_str());
}

// 7. Parameter recovery over 100 seeded noisy ideal runs.
void criterion_7() {
  const double a1 = 193.9e-12, a2 = 2.0e-9, a3 = -1.757e-12,
               v0 = kMap.v0_pzt;
  const auto grid = log_v_grid(20e-9, 1e-6, 500, kMap);
  const double truth[4] = {a1, a2, a3, v0};
  int within[4] = {0, 0, 0, 0};
  double chi2_red_sum = 0.0;
  int converged = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const synthgen::IdealModel model{kSphere, {a1, a2}, a3};
    const auto series =
        synthgen::gen_capacitance(model, kMap, grid, {0.005, true, seed});
    const auto fit = calibration::fit_ideal(series, kSphere, kMap, false);
    if (!fit.converged || fit.std_errors.empty()) continue;
    ++converged;
    chi2_red_sum += fit.chi2_red;
    for (int k = 0; k < 4; ++k) {
      if (std::abs(fit.params[k] - truth[k]) <= 3.0 * fit.std_errors[k]) {
        ++within[k];
      }
    }
  }
  const double chi2_red_mean = chi2_red_sum / std::max(converged, 1);
  const int min_within =
      std::min(std::min(within[0], within[1]), std::min(within[2], within[3]));
  const bool pass = converged == 100 && min_within >= 95 &&
                    chi2_red_mean >= 0.9 && chi2_red_mean <= 1.1;
  report(7, pass,
         "100 noisy ideal runs: " + std::to_string(converged) +
             " converged, per-parameter 3-sigma coverage >= " +
             std::to_string(min_within) + "/100 (require >= 95), mean "
             "chi2_red = " +
             fmt(chi2_red_mean) + " (require [0.9, 1.1])");
}

// 8. Mismatched-model fits lose by at least 3x in reduced chi^2.
void criterion_8() {
  const auto grid = log_v_grid(20e-9, 1e-6, 500, kMap);
  int wins = 0, runs = 0;
  double min_ratio = 1e300;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const synthgen::ModifiedModel truth{kStepped, {0.0, 0.0}, 1.0};
    const auto series =
        synthgen::gen_capacitance(truth, kMap, grid, {0.005, true, seed});
    const auto mismatched = calibration::fit_ideal(series, kSphere, kMap, true);
    const auto matched = calibration::fit_modified(series, kStepped, kMap, true);
    if (!matched.converged) continue;
    ++runs;
    const double ratio = mismatched.chi2_red / matched.chi2_red;
    min_ratio = std::min(min_ratio, ratio);
    if (ratio >= 3.0) ++wins;
  }
  report(8, runs == 100 && wins >= 95,
         "100 stepped-sphere runs at 0.5% noise: mismatched/matched chi2_red "
         ">= 3 in " +
             std::to_string(wins) + "/" + std::to_string(runs) +
             " (require >= 95); smallest ratio " + fmt(min_ratio));
}

// 9. Underestimated-error scenario: quoted 0.13 mV against 0.31 mV true
// scatter.
void criterion_9() {
  std::vector<double> d_grid;
  for (int i = 0; i < 500; ++i) {
    d_grid.push_back(160e-9 + (6e-6 - 160e-9) * i / 499.0);
  }
  const auto series = synthgen::gen_vzero(synthgen::ConstantProfile{15.29e-3},
                                          d_grid, 0.13e-3, 0.31e-3, 1);
  const auto r = vzero::constancy_test(series);
  const auto sc = vzero::scatter_comparison(series);
  const bool pass = std::abs(r.chi2_red - 5.7) <= 0.6 &&
                    std::abs(sc.ratio - 2.4) <= 0.2;
  report(9, pass,
         "N = 500, true scatter 0.31 mV vs quoted 0.13 mV: chi2_red = " +
             fmt(r.chi2_red) + " (require 5.7 +/- 0.6), scatter ratio = " +
             fmt(sc.ratio) +
             " (require 2.4 +/- 0.2); consistent with, not equal to, the "
             "7.2 obtained with heterogeneous real uncertainties");
}

// 10. CLI round trip plus lossless re-ingestion.
void criterion_10(const std::string& cli) {
  const fs::path dir =
      fs::temp_directory_path() / "capcal_acceptance_roundtrip";
  fs::create_directories(dir);
  const auto csv = (dir / "synth.csv").string();
  const auto json_out = (dir / "fit.json").string();

  const std::string synth_cmd =
      "'" + cli + "' synth --kind capacitance --model ideal --n 200 "
      "--d-min-nm 20 --d-max-nm 1000 --a1-pf 193.9 --a2-pf-per-m 2000 "
      "--a3-pf -1.757 --v0-pzt-v 69.31 --output '" + csv + "'";
  const std::string fit_cmd = "'" + cli + "' fit-cap --model ideal --input '" +
                              csv + "' --output '" + json_out +
                              "' --no-timestamp";
  bool pass = std::system(synth_cmd.c_str()) == 0 &&
              std::system(fit_cmd.c_str()) == 0;
  std::string detail;
  if (pass) {
    std::ifstream in(json_out);
    const auto j = nlohmann::json::parse(in);
    const double expect[4] = {193.9, 2000.0, -1.757, 69.31};
    double worst = 0.0;
    for (const auto& p : j["fit"]["params"]) {
      const std::string name = p["name"];
      const double value = p["value"];
      const int k = name == "A1"   ? 0
                    : name == "A2" ? 1
                    : name == "A3" ? 2
                                   : 3;
      worst = std::max(worst, std::abs(value / expect[k] - 1.0));
    }
    pass = j["fit"]["converged"].get<bool>() && worst < 0.5e-6;
    detail = "CLI synth -> fit-cap worst parameter deviation " + fmt(worst) +
             " (require < 5e-07 for 6 significant digits)";
  } else {
    detail = "CLI invocation failed";
  }

  // ingest -> emit -> ingest, bit for bit
  if (pass) {
    const auto s1 = capcal::io::read_capacitance_csv(csv);
    const auto copy = (dir / "copy.csv").string();
    capcal::io::write_capacitance_csv(copy, s1);
    const auto s2 = capcal::io::read_capacitance_csv(copy);
    bool lossless = s1.points.size() == s2.points.size();
    for (size_t i = 0; lossless && i < s1.points.size(); ++i) {
      lossless = s1.points[i].v_pzt == s2.points[i].v_pzt &&
                 s1.points[i].capacitance == s2.points[i].capacitance &&
                 s1.points[i].sigma == s2.points[i].sigma;
    }
    pass = lossless;
    detail += lossless ? "; ingest -> emit -> ingest lossless"
                       : "; ingest -> emit -> ingest NOT lossless";
  }
  report(10, pass, detail);
  fs::remove_all(dir);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: capcal_acceptance <path-to-cli>\n";
    return 2;
  }
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10(argv[1]);
  if (failures > 0) {
    std::printf("%d of 10 criteria failed\n", failures);
    return 1;
  }
  std::printf("all 10 criteria passed\n");
  return 0;
}
