#include "ergoguide/stats.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>

#include "ergoguide/errors.hpp"

namespace ergoguide {

Summary aggregate(std::span<const double> values) {
  Summary s;
  s.n = values.size();
  if (s.n == 0) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
  if (s.n >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

double f_distribution_sf(double f, double df1, double df2) {
  if (!(f > 0.0)) return 1.0;
  if (std::isinf(f)) return 0.0;
  // P(F > f) = I_{df2 / (df2 + df1 f)}(df2 / 2, df1 / 2)
  const double x = df2 / (df2 + df1 * f);
  return boost::math::ibeta(df2 / 2.0, df1 / 2.0, x);
}

AnovaResult rm_anova_f(const std::vector<std::vector<double>>& data) {
  const std::size_t n = data.size();
  if (n < 2) throw InputError("repeated-measures ANOVA needs at least two subjects");
  const std::size_t k = data.front().size();
  if (k < 2) throw InputError("repeated-measures ANOVA needs at least two conditions");
  for (const auto& row : data) {
    if (row.size() != k) throw InputError("unbalanced design: every subject needs every condition");
  }

  double grand = 0.0;
  std::vector<double> cond_mean(k, 0.0), subj_mean(n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t c = 0; c < k; ++c) {
      grand += data[s][c];
      cond_mean[c] += data[s][c];
      subj_mean[s] += data[s][c];
    }
  }
  grand /= static_cast<double>(n * k);
  for (double& m : cond_mean) m /= static_cast<double>(n);
  for (double& m : subj_mean) m /= static_cast<double>(k);

  AnovaResult r;
  double ss_total = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t c = 0; c < k; ++c) ss_total += (data[s][c] - grand) * (data[s][c] - grand);
  }
  for (double m : cond_mean) r.ss_conditions += static_cast<double>(n) * (m - grand) * (m - grand);
  for (double m : subj_mean) r.ss_subjects += static_cast<double>(k) * (m - grand) * (m - grand);
  r.ss_error = std::max(0.0, ss_total - r.ss_conditions - r.ss_subjects);
  r.df_conditions = static_cast<double>(k - 1);
  r.df_error = static_cast<double>((k - 1) * (n - 1));

  // Relative floor so exact-arithmetic zeros are not turned into noise ratios.
  const double floor = 1e-12 * std::max(1.0, ss_total);
  if (r.ss_conditions <= floor) {
    r.f = 0.0;
    r.p = 1.0;
    return r;
  }
  if (r.ss_error <= floor) {
    r.f = std::numeric_limits<double>::infinity();
    r.p = 0.0;
    return r;
  }
  r.f = (r.ss_conditions / r.df_conditions) / (r.ss_error / r.df_error);
  r.p = f_distribution_sf(r.f, r.df_conditions, r.df_error);
  return r;
}

double sus_score(std::span<const int> responses) {
  if (responses.size() != 10) throw InputError("SUS needs exactly 10 responses");
  int total = 0;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    const int v = responses[i];
    if (v < 1 || v > 5) {
      std::ostringstream msg;
      msg << "SUS item " << i + 1 << " out of range 1..5: " << v;
      throw InputError(msg.str());
    }
    total += (i % 2 == 0) ? v - 1 : 5 - v;  // items 1,3,5,... are positively worded
  }
  return 2.5 * static_cast<double>(total);
}

int seq_score(int response) {
  if (response < 1 || response > 7) throw InputError("SEQ response must lie in 1..7");
  return response;
}

}  // namespace ergoguide
