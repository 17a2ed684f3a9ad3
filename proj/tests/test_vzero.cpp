#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "capcal/synthgen.hpp"
#include "capcal/vzero.hpp"

using namespace capcal;
using namespace capcal::vzero;

namespace {

std::vector<double> linear_grid(double lo, double hi, int n) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(lo + (hi - lo) * i / (n - 1));
  return g;
}

}  // namespace

TEST_CASE("inflation arithmetic from headline statistics") {
  // chi2 = 3603 on 499 dof around a 15.29 mV mean with 0.13 mV bars.
  const auto r = constancy_from_stats(3603.0, 499, 15.29e-3, 6e-6, 0.31e-3,
                                      0.13e-3, 15.29e-3);
  CHECK(r.chi2_red == doctest::Approx(7.22).epsilon(1e-3));
  CHECK(r.inflation_factor == doctest::Approx(std::sqrt(3603.0 / 499.0)));
  CHECK(r.inflated_mean_sigma == doctest::Approx(0.349e-3).epsilon(2e-3));
  CHECK(r.rel_err_before == doctest::Approx(0.85).epsilon(5e-3));
  CHECK(r.rel_err_after == doctest::Approx(2.28).epsilon(5e-3));
  CHECK(r.survival_prob < 1e-12);
  CHECK_FALSE(r.degenerate_inflation);
}

TEST_CASE("constancy test on hand-checkable series") {
  SUBCASE("unit bars, v0 = 1, 2, 3") {
    VZeroSeries s;
    s.points = {{1e-7, 1.0, 1.0}, {2e-7, 2.0, 1.0}, {3e-7, 3.0, 1.0}};
    const auto r = constancy_test(s);
    CHECK(r.weighted_mean == doctest::Approx(2.0));
    CHECK(r.unweighted_mean == doctest::Approx(2.0));
    CHECK(r.chi2 == doctest::Approx(2.0));
    CHECK(r.dof == 2);
    CHECK(r.chi2_red == doctest::Approx(1.0));
    CHECK(r.inflation_factor == doctest::Approx(1.0));
    CHECK(r.sample_std == doctest::Approx(1.0));
    CHECK(r.mean_sigma == doctest::Approx(1.0));
    CHECK(r.mean_std_error == doctest::Approx(1.0 / std::sqrt(3.0)));
  }
  SUBCASE("identical values flag degenerate inflation") {
    VZeroSeries s;
    s.points = {{1e-7, 0.015, 1e-4}, {2e-7, 0.015, 1e-4}, {3e-7, 0.015, 1e-4}};
    const auto r = constancy_test(s);
    CHECK(r.chi2 == doctest::Approx(0.0).scale(1.0));
    CHECK(r.degenerate_inflation);
    CHECK(r.sample_std == doctest::Approx(0.0).scale(1.0));
  }
  SUBCASE("order invariance") {
    auto s = synthgen::gen_vzero(synthgen::ConstantProfile{15.29e-3},
                                 linear_grid(160e-9, 6e-6, 50), 0.13e-3,
                                 0.31e-3, 101);
    auto rev = s;
    std::reverse(rev.points.begin(), rev.points.end());
    const auto a = constancy_test(s);
    const auto b = constancy_test(rev);
    CHECK(a.weighted_mean == doctest::Approx(b.weighted_mean).epsilon(1e-13));
    CHECK(a.chi2 == doctest::Approx(b.chi2).epsilon(1e-13));
    CHECK(a.sample_std == doctest::Approx(b.sample_std).epsilon(1e-13));
  }
  SUBCASE("too few points") {
    VZeroSeries s;
    s.points = {{1e-7, 1.0, 1.0}};
    CHECK_THROWS_AS(constancy_test(s), std::invalid_argument);
  }
}

TEST_CASE("relative errors") {
  SUBCASE("headline values") {
    const auto r = constancy_from_stats(3603.0, 499, 15.29e-3, 6e-6, 0.31e-3,
                                        0.13e-3, 15.29e-3);
    const auto [before, after] = relative_errors(r);
    CHECK(before == doctest::Approx(0.85).epsilon(5e-3));
    CHECK(after == doctest::Approx(2.28).epsilon(5e-3));
  }
  SUBCASE("zero mean throws") {
    const auto r =
        constancy_from_stats(10.0, 9, 0.0, 1e-5, 1e-4, 1e-4, 0.0);
    CHECK_THROWS_AS(relative_errors(r), std::domain_error);
  }
}

TEST_CASE("scatter versus quoted error bars") {
  SUBCASE("underestimated bars show up as a ratio near the truth") {
    // true scatter 0.31 mV against quoted 0.13 mV bars
    const auto s = synthgen::gen_vzero(synthgen::ConstantProfile{15.29e-3},
                                       linear_grid(160e-9, 6e-6, 500),
                                       0.13e-3, 0.31e-3, 20260823);
    const auto sc = scatter_comparison(s);
    CHECK(sc.ratio == doctest::Approx(0.31 / 0.13).epsilon(0.1));
    CHECK(sc.mean_sigma == doctest::Approx(0.13e-3));
  }
  SUBCASE("honest bars give a ratio near one") {
    const auto s = synthgen::gen_vzero(synthgen::ConstantProfile{15.29e-3},
                                       linear_grid(160e-9, 6e-6, 500),
                                       0.13e-3, 0.13e-3, 4);
    CHECK(scatter_comparison(s).ratio == doctest::Approx(1.0).epsilon(0.1));
  }
  SUBCASE("two equal points give zero scatter") {
    VZeroSeries s;
    s.points = {{1e-7, 0.01, 1e-4}, {2e-7, 0.01, 1e-4}};
    CHECK(scatter_comparison(s).ratio == doctest::Approx(0.0).scale(1.0));
  }
}

TEST_CASE("error-bar inflation") {
  const auto s = synthgen::gen_vzero(synthgen::ConstantProfile{15.29e-3},
                                     linear_grid(160e-9, 6e-6, 200), 0.13e-3,
                                     0.31e-3, 8);
  const auto before = constancy_test(s);
  SUBCASE("inflating by sqrt(chi2_red) drives chi2_red to one") {
    const auto after =
        constancy_test(inflate_errors(s, before.inflation_factor));
    CHECK(after.chi2_red == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(after.weighted_mean ==
          doctest::Approx(before.weighted_mean).epsilon(1e-13));
  }
  SUBCASE("factor one is the identity") {
    const auto same = inflate_errors(s, 1.0);
    for (size_t i = 0; i < s.points.size(); ++i) {
      CHECK(same.points[i].sigma == s.points[i].sigma);
    }
  }
  SUBCASE("factor two divides chi2 by four") {
    const auto after = constancy_test(inflate_errors(s, 2.0));
    CHECK(after.chi2 == doctest::Approx(before.chi2 / 4.0).epsilon(1e-12));
  }
  SUBCASE("non-positive factors rejected") {
    CHECK_THROWS_AS(inflate_errors(s, 0.0), std::domain_error);
    CHECK_THROWS_AS(inflate_errors(s, -1.0), std::domain_error);
  }
}

TEST_CASE("trend fits") {
  const auto grid = linear_grid(160e-9, 6e-6, 120);
  SUBCASE("constant member matches the closed-form constant fit exactly") {
    const auto s = synthgen::gen_vzero(synthgen::ConstantProfile{15e-3}, grid,
                                       0.13e-3, 0.13e-3, 17);
    const auto t = trend_fits(s);
    fitting::DataSeries data;
    for (const auto& p : s.points) data.points.push_back({p.distance, p.v0, p.sigma});
    const auto direct = fitting::constant_fit(data);
    CHECK(t.constant.params[0] == direct.params[0]);
    CHECK(t.constant.chi2 == direct.chi2);
  }
  SUBCASE("a flat series rarely supports a linear trend") {
    // Delta-chi^2 for one extra parameter should exceed 9 (about 3 sigma)
    // only rarely under the null.
    int big = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      const auto s = synthgen::gen_vzero(synthgen::ConstantProfile{15e-3},
                                         grid, 0.13e-3, 0.13e-3, 1000 + seed);
      if (trend_fits(s).delta_chi2_linear > 9.0) ++big;
    }
    CHECK(big <= 2);
  }
  SUBCASE("a genuine slope is recovered within 3 sigma") {
    const double slope = 300.0;  // V/m: ~1.8 mV across the 6 um span
    const auto s = synthgen::gen_vzero(
        synthgen::LinearProfile{15e-3, slope}, grid, 0.13e-3, 0.13e-3, 33);
    const auto t = trend_fits(s);
    REQUIRE(t.linear.converged);
    CHECK(std::abs(t.linear.params[1] - slope) < 3.0 * t.linear.std_errors[1]);
    CHECK(t.delta_chi2_linear > 25.0);
  }
  SUBCASE("a strong sinusoid is picked up by the periodogram seed") {
    const synthgen::SinusoidProfile truth{15e-3, 0.39e-3, 1.5e-6, 0.7};
    const auto s = synthgen::gen_vzero(truth, grid, 0.13e-3, 0.13e-3, 55);
    const auto t = trend_fits(s);
    REQUIRE(t.sinusoid.converged);
    CHECK(std::abs(t.sinusoid.params[1]) ==
          doctest::Approx(truth.amplitude).epsilon(0.2));
    CHECK(t.delta_chi2_sinusoid > t.delta_chi2_linear);
    CHECK(t.delta_chi2_sinusoid > 100.0);
  }
  SUBCASE("fewer than six points skips the sinusoid, never throws") {
    VZeroSeries s;
    for (int i = 0; i < 5; ++i) {
      s.points.push_back({1e-7 * (i + 1), 0.015 + 1e-5 * i, 1e-4});
    }
    const auto t = trend_fits(s);
    CHECK_FALSE(t.sinusoid.converged);
    CHECK(t.sinusoid.message.find("6 points") != std::string::npos);
    CHECK(t.linear.converged);
  }
}
