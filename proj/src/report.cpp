#include "ergoguide/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <sstream>

#include "ergoguide/errors.hpp"
#include "ergoguide/metrics.hpp"
#include "ergoguide/stats.hpp"

namespace ergoguide {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void accumulate(std::map<std::string, std::vector<double>>& acc, const std::string& key,
                std::optional<double> v) {
  auto& slot = acc[key];
  if (v) slot.push_back(*v);
}

std::optional<double> mean(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return aggregate(v).mean;
}

}  // namespace

std::string Table::to_csv() const {
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << csv_cell(cells[i]);
    }
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out.str();
}

TrialIndices trial_indices(const TrialLog& log) {
  std::map<std::string, std::vector<double>> acc;
  const MetricsOptions opt;
  std::vector<double> succ;
  for (const auto& seg : log.segments) {
    const SegmentMetrics m = evaluate_segment(log, seg, opt);
    succ.push_back(m.success ? 100.0 : 0.0);
    accumulate(acc, "reach_time", m.reach_time);
    for (GuidedJoint g : kGuidedJoints) {
      if (!log.guided[index(g)]) continue;
      const std::string name(guided_name(g));
      accumulate(acc, "confusion." + name, m.confusion[index(g)]);
      accumulate(acc, "final_error." + name, m.final_error[index(g)]);
      if (m.motion && !m.motion->degenerate) {
        accumulate(acc, "angular_distance." + name, m.motion->angular_distance[index(g)]);
        accumulate(acc, "velocity." + name, m.motion->velocity[index(g)]);
        accumulate(acc, "speed." + name, m.motion->speed[index(g)]);
      } else if (m.motion) {
        accumulate(acc, "angular_distance." + name, m.motion->angular_distance[index(g)]);
      }
    }
    if (m.decrement) {
      for (Joint j : kAllJoints) {
        accumulate(acc, "decrement." + std::string(joint_name(j)), (*m.decrement)[index(j)]);
      }
    }
  }
  TrialIndices out;
  if (!succ.empty()) out["success"] = aggregate(succ).mean;
  for (const auto& [k, v] : acc) out[k] = mean(v);
  std::vector<double> seq, sus;
  for (const auto& q : log.questionnaires) {
    if (q.seq) seq.push_back(*q.seq);
    if (q.sus_score) sus.push_back(*q.sus_score);
  }
  if (!seq.empty()) out["seq"] = mean(seq);
  if (!sus.empty()) out["sus"] = mean(sus);
  return out;
}

nlohmann::json trial_summary(const TrialLog& log) {
  nlohmann::json j{{"protocol", log.protocol},
                   {"joint_set", log.joint_set},
                   {"condition", log.condition},
                   {"subject", log.subject},
                   {"status", log.status}};
  nlohmann::json idx = nlohmann::json::object();
  for (const auto& [k, v] : trial_indices(log)) idx[k] = v ? nlohmann::json(*v) : nlohmann::json();
  j["indices"] = idx;
  return j;
}

Table condition_table(std::span<const TrialLog> logs, const std::vector<std::string>& conditions,
                      const std::vector<std::string>& index_order) {
  // values[index][condition][subject] -> trial values
  std::map<std::string, std::map<std::string, std::map<int, std::vector<double>>>> values;
  for (const auto& log : logs) {
    for (const auto& [k, v] : trial_indices(log)) {
      if (v) values[k][log.condition][log.subject].push_back(*v);
    }
  }
  Table t;
  t.header.push_back("index");
  for (const auto& c : conditions) {
    t.header.push_back(c + "_mean");
    t.header.push_back(c + "_std");
    t.header.push_back(c + "_n");
  }
  t.header.push_back("F");
  t.header.push_back("p");

  for (const auto& key : index_order) {
    const auto it = values.find(key);
    if (it == values.end()) continue;
    std::vector<std::string> row{key};
    std::map<int, std::vector<double>> per_subject;
    for (std::size_t ci = 0; ci < conditions.size(); ++ci) {
      std::vector<double> cond_values;
      const auto cit = it->second.find(conditions[ci]);
      if (cit != it->second.end()) {
        for (const auto& [subject, vs] : cit->second) {
          const double m = aggregate(vs).mean;
          cond_values.push_back(m);
          auto& slot = per_subject[subject];
          slot.resize(conditions.size(), std::numeric_limits<double>::quiet_NaN());
          slot[ci] = m;
        }
      }
      if (cond_values.empty()) {
        row.insert(row.end(), {"", "", "0"});
      } else {
        const Summary s = aggregate(cond_values);
        row.push_back(fmt(s.mean));
        row.push_back(fmt(s.std));
        row.push_back(std::to_string(s.n));
      }
    }
    std::vector<std::vector<double>> complete;
    for (auto& [subject, vs] : per_subject) {
      if (std::none_of(vs.begin(), vs.end(), [](double v) { return std::isnan(v); })) {
        complete.push_back(vs);
      }
    }
    if (complete.size() >= 2 && conditions.size() >= 2) {
      const AnovaResult a = rm_anova_f(complete);
      row.push_back(fmt(a.f));
      row.push_back(fmt(a.p));
    } else {
      row.insert(row.end(), {"", ""});
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::vector<std::pair<std::string, Table>> build_reports(std::span<const TrialLog> logs) {
  std::vector<std::pair<std::string, Table>> out;
  for (const std::string set : {"torso", "arm"}) {
    std::vector<TrialLog> subset;
    std::vector<std::string> conditions;
    for (const auto& log : logs) {
      if (log.protocol != "modality_test" || log.joint_set != set) continue;
      subset.push_back(log);
    }
    if (subset.empty()) continue;
    for (Modality m : {Modality::Spot, Modality::Ramp, Modality::Pattern}) {
      const std::string name(modality_name(m));
      if (std::any_of(subset.begin(), subset.end(),
                      [&](const TrialLog& l) { return l.condition == name; })) {
        conditions.push_back(name);
      }
    }
    std::vector<std::string> order{"success", "reach_time"};
    const auto mask = subset.front().guided;
    for (const std::string metric :
         {"confusion", "angular_distance", "velocity", "speed", "final_error"}) {
      for (GuidedJoint g : kGuidedJoints) {
        if (mask[index(g)]) order.push_back(metric + "." + std::string(guided_name(g)));
      }
    }
    order.push_back("seq");
    order.push_back("sus");
    out.emplace_back("table_modality_" + set + ".csv",
                     condition_table(subset, conditions, order));
  }

  std::vector<TrialLog> ergo;
  std::vector<std::string> conditions;
  for (const auto& log : logs) {
    if (log.protocol != "ergonomic_test") continue;
    ergo.push_back(log);
    if (std::find(conditions.begin(), conditions.end(), log.condition) == conditions.end()) {
      conditions.push_back(log.condition);
    }
  }
  if (!ergo.empty()) {
    std::sort(conditions.begin(), conditions.end());
    std::vector<std::string> order;
    for (Joint j : kAllJoints) order.push_back("decrement." + std::string(joint_name(j)));
    order.insert(order.end(), {"success", "reach_time"});
    for (GuidedJoint g : kGuidedJoints) order.push_back("final_error." + std::string(guided_name(g)));
    order.insert(order.end(), {"seq", "sus"});
    out.emplace_back("table_ergonomic.csv", condition_table(ergo, conditions, order));
  }
  return out;
}

}  // namespace ergoguide
