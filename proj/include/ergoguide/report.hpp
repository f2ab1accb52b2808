#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ergoguide/trial_log.hpp"

namespace ergoguide {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_csv() const;
};

/// Named per-trial indices, averaged over the trial's segments. Keys look like
/// "success", "reach_time", "confusion.torso", "decrement.knee", "sus".
using TrialIndices = std::map<std::string, std::optional<double>>;

TrialIndices trial_indices(const TrialLog& log);
nlohmann::json trial_summary(const TrialLog& log);

/// Rows are indices, columns mean/std/n per condition followed by the
/// repeated-measures F and p across conditions. Std is empty for n < 2 and
/// F/p are empty when fewer than two complete subjects exist.
Table condition_table(std::span<const TrialLog> logs, const std::vector<std::string>& conditions,
                      const std::vector<std::string>& index_order);

/// One table per modality-test joint set plus one for the ergonomic test,
/// keyed by a file name.
std::vector<std::pair<std::string, Table>> build_reports(std::span<const TrialLog> logs);

}  // namespace ergoguide
