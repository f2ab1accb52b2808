#include <doctest.h>

#include <cmath>
#include <random>

#include "ergoguide/errors.hpp"
#include "ergoguide/stats.hpp"

using namespace ergoguide;

TEST_CASE("descriptive aggregation") {
  const std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
  const Summary s = aggregate(v);
  CHECK(s.n == 8);
  CHECK(s.mean == 5.0);
  CHECK(*s.std == doctest::Approx(std::sqrt(32.0 / 7.0)).epsilon(1e-14));
  const std::vector<double> one{3.5};
  CHECK_FALSE(aggregate(one).std.has_value());
  CHECK(aggregate(std::vector<double>{}).n == 0);
}

TEST_CASE("repeated-measures ANOVA against a hand-computed table") {
  // Condition means 5.5, 8, 10; subject means 9, 22/3, 26/3, 19/3.
  // SS_cond = 122/3, SS_subj = 41/3, SS_err = 10/3, F = (61/3) / (5/9) = 36.6.
  const std::vector<std::vector<double>> d{{7, 9, 11}, {5, 8, 9}, {6, 8, 12}, {4, 7, 8}};
  const AnovaResult a = rm_anova_f(d);
  CHECK(std::abs(a.ss_conditions - 122.0 / 3.0) < 1e-9);
  CHECK(std::abs(a.ss_subjects - 41.0 / 3.0) < 1e-9);
  CHECK(std::abs(a.ss_error - 10.0 / 3.0) < 1e-9);
  CHECK(std::abs(a.f - 36.6) < 1e-9);
  CHECK(a.df_conditions == 2);
  CHECK(a.df_error == 6);
  CHECK(std::abs(a.p - 0.00043478865792915644) < 1e-9);
}

TEST_CASE("two conditions: F equals the squared paired t") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<double>> d;
    std::vector<double> diff;
    for (int s = 0; s < 9; ++s) {
      const double a = std::normal_distribution<double>(10, 2)(rng);
      const double b = a + std::normal_distribution<double>(0.7, 1)(rng);
      d.push_back({a, b});
      diff.push_back(b - a);
    }
    double mean = 0.0;
    for (double x : diff) mean += x;
    mean /= diff.size();
    double var = 0.0;
    for (double x : diff) var += (x - mean) * (x - mean);
    var /= diff.size() - 1;
    const double t = mean / std::sqrt(var / diff.size());
    CHECK(rm_anova_f(d).f == doctest::Approx(t * t).epsilon(1e-9));
  }
}

TEST_CASE("ANOVA edge cases") {
  const std::vector<std::vector<double>> same{{1, 1, 1}, {2, 2, 2}, {5, 5, 5}};
  const AnovaResult a = rm_anova_f(same);
  CHECK(a.f == 0.0);
  CHECK(a.p == 1.0);
  CHECK_THROWS_AS(rm_anova_f({{1, 2, 3}, {1, 2}}), InputError);
  CHECK_THROWS_AS(rm_anova_f({{1, 2, 3}}), InputError);
  CHECK_THROWS_AS(rm_anova_f({{1}, {2}}), InputError);
}

TEST_CASE("F distribution upper tail") {
  CHECK(std::abs(f_distribution_sf(3.5, 3, 12) - 0.04964053797988681) < 1e-12);
  CHECK(f_distribution_sf(0.0, 2, 6) == 1.0);
}

TEST_CASE("questionnaires") {
  CHECK(sus_score(std::vector<int>(10, 3)) == 50.0);
  CHECK(sus_score(std::vector<int>{5, 1, 5, 1, 5, 1, 5, 1, 5, 1}) == 100.0);
  CHECK(sus_score(std::vector<int>{1, 5, 1, 5, 1, 5, 1, 5, 1, 5}) == 0.0);
  CHECK_THROWS_AS(sus_score(std::vector<int>(9, 3)), InputError);
  CHECK_THROWS_AS(sus_score(std::vector<int>{3, 3, 3, 3, 6, 3, 3, 3, 3, 3}), InputError);
  CHECK(seq_score(7) == 7);
  CHECK(seq_score(1) == 1);
  CHECK_THROWS_AS(seq_score(0), InputError);
  CHECK_THROWS_AS(seq_score(8), InputError);
}
