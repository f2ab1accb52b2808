#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace ergoguide {

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  std::optional<double> std;  // sample standard deviation; absent for n < 2
};

Summary aggregate(std::span<const double> values);

struct AnovaResult {
  double f = 0.0;
  double p = 1.0;
  double df_conditions = 0.0;
  double df_error = 0.0;
  double ss_conditions = 0.0;
  double ss_subjects = 0.0;
  double ss_error = 0.0;
};

/// One-way repeated-measures ANOVA; data[subject][condition].
/// Throws InputError for unbalanced or too-small designs.
AnovaResult rm_anova_f(const std::vector<std::vector<double>>& data);

/// Upper tail of the F distribution.
double f_distribution_sf(double f, double df1, double df2);

/// System Usability Scale, 10 items in 1..5, scored 0..100.
double sus_score(std::span<const int> responses);
/// Single Ease Question, 1 ("very hard") .. 7 ("very easy").
int seq_score(int response);

}  // namespace ergoguide
