#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ergoguide/errors.hpp"
#include "ergoguide/harness.hpp"
#include "ergoguide/metrics.hpp"
#include "ergoguide/report.hpp"
#include "ergoguide/session.hpp"

namespace fs = std::filesystem;
using namespace ergoguide;
using nlohmann::json;

namespace {

struct CommonArgs {
  std::string config;
  std::string protocol = "modality_test";
  std::string modality = "spot";
  std::string agent = "ideal";
  std::string joint_set = "torso";
  std::uint64_t seed = 1;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config, "session config JSON");
  cmd->add_option("--protocol", a.protocol, "modality_test or ergonomic_test");
  cmd->add_option("--modality", a.modality, "spot, ramp or pattern");
  cmd->add_option("--agent", a.agent, "ideal, noisy or sluggish");
  cmd->add_option("--joint-set", a.joint_set, "torso or arm");
  cmd->add_option("--seed", a.seed, "random seed");
}

SessionConfig resolve(const CommonArgs& a, const CLI::App* cmd) {
  SessionConfig c = a.config.empty() ? SessionConfig{} : load_session_config(a.config);
  auto given = [&](const char* name) { return cmd->count(name) > 0 || a.config.empty(); };
  if (given("--protocol")) {
    const auto k = protocol_from_name(a.protocol);
    if (!k) throw ConfigError("unknown protocol '" + a.protocol + "'");
    c.protocol.kind = *k;
  }
  if (given("--modality")) {
    const auto m = modality_from_name(a.modality);
    if (!m) throw ConfigError("unknown modality '" + a.modality + "'");
    c.modality = *m;
  }
  if (given("--agent")) {
    c.agent = a.agent;
    c.agent_params.reset();
  }
  if (given("--joint-set")) c.joint_set = a.joint_set;
  if (given("--seed")) c.seed = a.seed;
  c.protocol.seed = c.seed;
  c.validate();
  return c;
}

std::vector<TrialLog> read_logs(const std::vector<std::string>& inputs) {
  std::vector<std::string> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      for (const auto& e : fs::directory_iterator(in)) {
        if (e.path().extension() == ".jsonl") files.push_back(e.path().string());
      }
    } else {
      files.push_back(in);
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<TrialLog> logs;
  for (const auto& f : files) logs.push_back(read_log_file(f));
  return logs;
}

void write_reports(const std::vector<TrialLog>& logs, const std::string& out_dir) {
  fs::create_directories(out_dir);
  for (const auto& [name, table] : build_reports(logs)) {
    const auto path = fs::path(out_dir) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << table.to_csv();
    std::cout << "wrote " << path.string() << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Directional vibrotactile posture guidance: simulation and experiment harness"};
  app.require_subcommand(1);

  CommonArgs run_args;
  int condition = 2;
  std::string run_out;
  auto* run = app.add_subcommand("run", "run one trial and write its log");
  add_common(run, run_args);
  run->add_option("--condition", condition, "ergonomic condition 1..3");
  run->add_option("--out", run_out, "log file (.jsonl)")->required();

  CommonArgs camp_args;
  int subjects = 15;
  double jitter = 0.1;
  std::string camp_out = "campaign";
  auto* campaign = app.add_subcommand("campaign", "run every trial for virtual subjects");
  add_common(campaign, camp_args);
  campaign->add_option("--subjects", subjects, "number of virtual subjects");
  campaign->add_option("--jitter", jitter, "relative spread of agent parameters");
  campaign->add_option("--out", camp_out, "output directory");

  std::vector<std::string> report_in;
  std::string report_out = "report";
  auto* report = app.add_subcommand("report", "aggregate logs into CSV tables");
  report->add_option("logs", report_in, "log files or directories")->required();
  report->add_option("--out", report_out, "output directory");

  CommonArgs serve_args;
  int port = 8765;
  std::string host = "127.0.0.1";
  auto* serve = app.add_subcommand("serve", "live session endpoint for the browser client");
  add_common(serve, serve_args);
  serve->add_option("--port", port, "TCP port");
  serve->add_option("--host", host, "bind address");
  serve->add_option("--condition", condition, "ergonomic condition 1..3");

  double distance = 0.5, mass = 4.0, height = 0.5;
  std::uint64_t solve_seed = 1;
  std::string model_path;
  auto* solve = app.add_subcommand("solve", "one-shot ergonomic posture optimization");
  solve->add_option("--distance", distance, "object distance ahead of the heel, m");
  solve->add_option("--mass", mass, "load mass, kg");
  solve->add_option("--height", height, "object height, m");
  solve->add_option("--seed", solve_seed, "solver seed");
  solve->add_option("--model", model_path, "model JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      SessionConfig c = resolve(run_args, run);
      if (run->count("--condition")) c.condition = condition;
      const TrialLog log = c.protocol.kind == ProtocolKind::ModalityTest
                               ? run_modality_trial(c, target_sequence(c.protocol, c.joint_set))
                               : run_ergonomic_trial(c, c.condition);
      if (const auto parent = fs::path(run_out).parent_path(); !parent.empty()) {
        fs::create_directories(parent);
      }
      write_log_file(run_out, log);
      std::cout << trial_summary(log).dump(2) << '\n';
    } else if (*campaign) {
      SessionConfig c = resolve(camp_args, campaign);
      if (!campaign->count("--agent") && camp_args.config.empty()) c.agent = "noisy";
      CampaignOptions opt;
      opt.subjects = subjects;
      opt.jitter = jitter;
      const auto logs = run_campaign(c, opt);
      fs::create_directories(fs::path(camp_out) / "logs");
      for (std::size_t i = 0; i < logs.size(); ++i) {
        char name[96];
        std::snprintf(name, sizeof name, "s%02d_%03zu_%s_%s.jsonl", logs[i].subject, i,
                      logs[i].joint_set.c_str(), logs[i].condition.c_str());
        write_log_file((fs::path(camp_out) / "logs" / name).string(), logs[i]);
      }
      write_reports(logs, camp_out);
    } else if (*report) {
      write_reports(read_logs(report_in), report_out);
    } else if (*serve) {
      SessionConfig c = resolve(serve_args, serve);
      if (serve->count("--condition")) c.condition = condition;
      serve_session(c, port, host);
    } else if (*solve) {
      const HumanModel model = model_path.empty() ? HumanModel::standard() : load_model(model_path);
      const LoadSpec load{mass};
      const Posture q_init = reaching_posture(model, distance, height, load);
      OptimizationSpec spec;
      spec.task.z_ref = forward_kinematics(model, q_init).object_height;
      spec.solver.seed = solve_seed;
      const OptimizationResult r = optimize_posture(model, q_init, load, spec);
      const TorqueVector ti = overloading_torques_oracle(model, q_init, load);
      const TorqueVector tf = overloading_torques_oracle(model, r.q_d, load);
      json out{{"q_init", q_init.angles},
               {"q_d", r.q_d.angles},
               {"objective_init", r.objective_init},
               {"objective_final", r.objective_final},
               {"tau_init", ti},
               {"tau_final", tf},
               {"feasible", r.report.feasible}};
      json d = json::object();
      const auto dec = decrement_ratio(ti, tf);
      for (Joint j : kAllJoints) {
        d[std::string(joint_name(j))] = dec[index(j)] ? json(*dec[index(j)]) : json();
      }
      out["decrement"] = d;
      std::cout << out.dump(2) << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
