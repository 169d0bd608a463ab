#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "apiot/runner.hpp"

using namespace apiot;

namespace {

void add_condition_flags(CLI::App* cmd, std::string& protocol, std::string& topology,
                         std::string& impairment, std::string& policy, std::string& overseer,
                         int& replicates, uint64_t& seed, std::string& out, int& turn_cap,
                         std::string& config_path) {
  cmd->add_option("--protocol", protocol, "coap | modbus | mqtt");
  cmd->add_option("--topology", topology, "t1 | t2 | t3 | mesh15");
  cmd->add_option("--impairment", impairment, "none | medium | heavy");
  cmd->add_option("--policy", policy,
                  "scripted | scripted_noise | repeater | recon_loop | no_verify | "
                  "no_blue_transition | llm");
  cmd->add_option("--overseer", overseer, "on | off");
  cmd->add_option("--replicates", replicates, "replicates per condition");
  cmd->add_option("--seed", seed, "master seed");
  cmd->add_option("--out", out, "output directory");
  cmd->add_option("--turn-cap", turn_cap, "maximum agent turns per run");
  cmd->add_option("--config", config_path, "ini-style config file (flags override it)");
}

int apply_condition_flags(RunConfig& cfg, const std::string& protocol,
                          const std::string& topology, const std::string& impairment,
                          const std::string& policy, const std::string& overseer,
                          int replicates, uint64_t seed, const std::string& out, int turn_cap,
                          const std::string& config_path) {
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "cannot read config: " << config_path << "\n";
      return 1;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    cfg = parse_run_config_ini(buf.str(), cfg);
  }
  if (!protocol.empty()) {
    if (protocol == "coap") cfg.protocol = Protocol::CoAP;
    else if (protocol == "modbus") cfg.protocol = Protocol::Modbus;
    else if (protocol == "mqtt") cfg.protocol = Protocol::MQTT;
    else {
      std::cerr << "unknown protocol: " << protocol << "\n";
      return 1;
    }
  }
  if (!topology.empty()) {
    auto t = topology_from_string(topology);
    if (!t) {
      std::cerr << "unknown topology: " << topology << "\n";
      return 1;
    }
    cfg.topology = *t;
  }
  if (!impairment.empty()) {
    if (impairment != "none" && impairment != "medium" && impairment != "heavy") {
      std::cerr << "unknown impairment: " << impairment << "\n";
      return 1;
    }
    cfg.impairment = impairment;
  }
  if (!policy.empty()) {
    auto p = policy_from_string(policy);
    if (!p) {
      std::cerr << "unknown policy: " << policy << "\n";
      return 1;
    }
    cfg.policy = *p;
  }
  if (!overseer.empty()) cfg.overseer_on = (overseer != "off");
  if (replicates > 0) cfg.replicates = replicates;
  if (seed != 0) cfg.master_seed = seed;
  if (!out.empty()) cfg.out_dir = out;
  if (turn_cap > 0) cfg.turn_cap = turn_cap;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic purple-team lab runner"};
  app.require_subcommand(1);

  std::string protocol, topology, impairment, policy, overseer, out, config_path;
  int replicates = 0, turn_cap = 0;
  uint64_t seed = 0;

  CLI::App* run_cmd = app.add_subcommand("run", "run one condition");
  add_condition_flags(run_cmd, protocol, topology, impairment, policy, overseer, replicates,
                      seed, out, turn_cap, config_path);

  std::string m_protocol, m_topology, m_impairment, m_policy, m_overseer, m_out, m_config;
  int m_replicates = 0, m_turn_cap = 0;
  uint64_t m_seed = 0;
  CLI::App* matrix_cmd =
      app.add_subcommand("matrix", "sweep protocols x topologies x overseer on/off");
  add_condition_flags(matrix_cmd, m_protocol, m_topology, m_impairment, m_policy, m_overseer,
                      m_replicates, m_seed, m_out, m_turn_cap, m_config);

  std::string analyze_dir = "out", csv_path;
  CLI::App* analyze_cmd = app.add_subcommand("analyze", "summarize recorded runs");
  analyze_cmd->add_option("--dir", analyze_dir, "directory holding *.record.json");
  analyze_cmd->add_option("--csv", csv_path, "also write a per-condition csv");

  CLI11_PARSE(app, argc, argv);

  if (run_cmd->parsed()) {
    RunConfig cfg;
    if (apply_condition_flags(cfg, protocol, topology, impairment, policy, overseer, replicates,
                              seed, out, turn_cap, config_path) != 0) {
      return 1;
    }
    auto records = run_condition(cfg, true);
    std::cout << render_summary(summarize(records));
    return 0;
  }

  if (matrix_cmd->parsed()) {
    RunConfig cfg;
    if (apply_condition_flags(cfg, m_protocol, m_topology, m_impairment, m_policy, m_overseer,
                              m_replicates, m_seed, m_out, m_turn_cap, m_config) != 0) {
      return 1;
    }
    auto records = run_matrix(cfg, true);
    std::cout << render_summary(summarize(records));
    return 0;
  }

  if (analyze_cmd->parsed()) {
    auto records = load_records(analyze_dir);
    if (records.empty()) {
      std::cerr << "no records under " << analyze_dir << "\n";
      return 1;
    }
    auto summaries = summarize(records);
    std::cout << render_summary(summaries);
    if (!csv_path.empty()) {
      std::ofstream csv(csv_path);
      csv << "condition,runs,successes,ci_lo,ci_hi,median_turns,redundant_rate,"
             "intervention_rate\n";
      for (const auto& s : summaries) {
        csv << s.condition << "," << s.runs << "," << s.successes << "," << s.success_ci.lo << ","
            << s.success_ci.hi << "," << s.median_turns << "," << s.mean_redundant_rate << ","
            << s.mean_intervention_rate << "\n";
      }
    }
    return 0;
  }

  return 0;
}
