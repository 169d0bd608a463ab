#include "apiot/runner.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "apiot/rng.hpp"

namespace apiot {

nlohmann::json RunConfig::to_json() const {
  return {{"protocol", to_string(protocol)},
          {"topology", to_string(topology)},
          {"impairment", impairment},
          {"policy", to_string(policy)},
          {"overseer", overseer_on},
          {"replicates", replicates},
          {"master_seed", master_seed},
          {"turn_cap", turn_cap}};
}

std::string RunConfig::condition_tag() const {
  return std::string(to_string(protocol)) + "-" + to_string(topology) + "-" + impairment + "-" +
         to_string(policy) + "-" + (overseer_on ? "on" : "off");
}

ImpairmentProfile impairment_from_string(const std::string& name) {
  if (name == "medium") return ImpairmentProfile::medium();
  if (name == "heavy") return ImpairmentProfile::heavy();
  return ImpairmentProfile::none();
}

RunConfig parse_run_config_ini(const std::string& text, const RunConfig& base) {
  RunConfig cfg = base;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    auto strip = [](std::string s) {
      size_t a = s.find_first_not_of(" \t\r");
      size_t b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    line = strip(line);
    if (line.empty() || line.front() == '[') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = strip(line.substr(0, eq));
    std::string value = strip(line.substr(eq + 1));
    if (key == "protocol") {
      if (value == "coap") cfg.protocol = Protocol::CoAP;
      else if (value == "modbus") cfg.protocol = Protocol::Modbus;
      else if (value == "mqtt") cfg.protocol = Protocol::MQTT;
    } else if (key == "topology") {
      if (auto t = topology_from_string(value)) cfg.topology = *t;
    } else if (key == "impairment") {
      cfg.impairment = value;
    } else if (key == "policy") {
      if (auto p = policy_from_string(value)) cfg.policy = *p;
    } else if (key == "overseer") {
      cfg.overseer_on = (value == "on" || value == "true" || value == "1");
    } else if (key == "replicates") {
      cfg.replicates = std::stoi(value);
    } else if (key == "seed") {
      cfg.master_seed = std::stoull(value);
    } else if (key == "turn_cap") {
      cfg.turn_cap = std::stoi(value);
    } else if (key == "out") {
      cfg.out_dir = value;
    }
  }
  return cfg;
}

uint64_t derive_run_seed(const RunConfig& cfg, int replicate) {
  return fnv1a(cfg.condition_tag() + "|" + std::to_string(cfg.master_seed) + "|" +
               std::to_string(replicate));
}

RunRecord execute_run(const RunConfig& cfg, int replicate) {
  std::string run_id = cfg.condition_tag() + "-r" + std::to_string(replicate);
  RunRecord record;
  record.run_id = run_id;
  record.config = cfg.to_json();
  record.config["replicate"] = replicate;

  uint64_t seed = derive_run_seed(cfg, replicate);
  auto roster = default_roster(cfg.protocol, cfg.topology);
  auto world = build_topology(cfg.topology, roster, impairment_from_string(cfg.impairment), seed);
  if (!world.ok()) {
    record.status = "task_aborted";
    record.abort_reason = std::string("infrastructure: topology build failed: ") +
                          to_string(world.error());
    return record;
  }

  auto policy = make_policy(cfg.policy, cfg.protocol, seed);
  MissionConfig mc;
  mc.run_id = run_id;
  mc.turn_cap = cfg.turn_cap;
  mc.overseer_on = cfg.overseer_on;

  MissionOutcome outcome = run_mission(world.value(), *policy, mc);

  record.status = to_string(outcome.mission.status);
  record.abort_reason = outcome.mission.abort_reason;
  record.turns = static_cast<int>(outcome.turn_log.size());
  record.blue_entered_turn = outcome.mission.blue_entered_turn;
  record.sim_end_ms = world.value().now_ms();
  record.turn_log = std::move(outcome.turn_log);
  record.injections = std::move(outcome.injections);
  record.annotations = std::move(outcome.annotations);
  for (const Finding& f : outcome.mission.findings) record.findings.push_back(to_record(f));
  for (const Patch& p : outcome.mission.patches) record.patches.push_back(to_record(p));
  record.crashed_at_end = world.value().crashed_ips();
  return record;
}

void write_run_artifacts(const RunConfig& cfg, const RunRecord& record) {
  std::filesystem::create_directories(cfg.out_dir);
  {
    std::ofstream jsonl(std::filesystem::path(cfg.out_dir) / (record.run_id + ".jsonl"));
    for (const TurnLogRow& row : record.turn_log) jsonl << row.to_json().dump() << "\n";
  }
  std::ofstream rec(std::filesystem::path(cfg.out_dir) / (record.run_id + ".record.json"));
  rec << record.to_json().dump(2) << "\n";
}

std::vector<RunRecord> run_condition(const RunConfig& cfg, bool write_files) {
  std::vector<RunRecord> out;
  for (int r = 0; r < cfg.replicates; ++r) {
    RunRecord record = execute_run(cfg, r);
    if (write_files) write_run_artifacts(cfg, record);
    out.push_back(std::move(record));
  }
  return out;
}

std::vector<RunRecord> run_matrix(const RunConfig& base, bool write_files) {
  std::vector<std::pair<RunConfig, int>> jobs;
  for (Protocol proto : {Protocol::CoAP, Protocol::Modbus, Protocol::MQTT}) {
    for (TopologyKind topo : {TopologyKind::T1FlatStar, TopologyKind::T2PurdueSegmented,
                              TopologyKind::T3EdgeFogCloud}) {
      for (bool overseer : {true, false}) {
        RunConfig cfg = base;
        cfg.protocol = proto;
        cfg.topology = topo;
        cfg.overseer_on = overseer;
        for (int r = 0; r < base.replicates; ++r) jobs.emplace_back(cfg, r);
      }
    }
  }

  // Shuffled execution order, seeded so reruns are byte-identical. Run seeds
  // derive from the condition, not the order, so this only exercises
  // independence.
  Rng rng(fnv1a("matrix-order|" + std::to_string(base.master_seed)));
  for (size_t i = jobs.size(); i > 1; --i) {
    std::swap(jobs[i - 1], jobs[rng.below(i)]);
  }

  std::vector<RunRecord> out;
  nlohmann::json manifest = nlohmann::json::array();
  for (const auto& [cfg, replicate] : jobs) {
    RunRecord record = execute_run(cfg, replicate);
    if (write_files) write_run_artifacts(cfg, record);
    manifest.push_back({{"run_id", record.run_id},
                        {"seed", derive_run_seed(cfg, replicate)},
                        {"status", record.status}});
    out.push_back(std::move(record));
  }
  if (write_files) {
    std::filesystem::create_directories(base.out_dir);
    std::ofstream mf(std::filesystem::path(base.out_dir) / "manifest.json");
    mf << manifest.dump(2) << "\n";
  }
  return out;
}

std::vector<ConditionSummary> summarize(const std::vector<RunRecord>& records) {
  std::map<std::string, std::vector<const RunRecord*>> by_condition;
  for (const RunRecord& r : records) {
    std::string tag = r.config.value("protocol", "?");
    tag += "-" + r.config.value("topology", "?");
    tag += "-" + r.config.value("impairment", "?");
    tag += "-" + r.config.value("policy", "?");
    tag += r.config.value("overseer", false) ? "-on" : "-off";
    by_condition[tag].push_back(&r);
  }

  std::vector<ConditionSummary> out;
  for (const auto& [tag, runs] : by_condition) {
    ConditionSummary s;
    s.condition = tag;
    s.runs = static_cast<int>(runs.size());
    std::vector<double> turns;
    for (const RunRecord* r : runs) {
      RunMetrics m = compute_metrics(*r);
      if (m.success) ++s.successes;
      turns.push_back(m.turns);
      s.mean_redundant_rate += m.redundant_rate;
      s.mean_intervention_rate += m.intervention_rate;
      for (DegeneratePattern p : detect_degenerate(*r)) ++s.degenerate_counts[to_string(p)];
      if (!m.success) ++s.failure_counts[to_string(classify_failure(*r))];
    }
    s.success_ci = wilson_interval(s.successes, s.runs);
    std::sort(turns.begin(), turns.end());
    if (!turns.empty()) {
      size_t mid = turns.size() / 2;
      s.median_turns = turns.size() % 2 ? turns[mid] : (turns[mid - 1] + turns[mid]) / 2.0;
    }
    s.mean_redundant_rate /= s.runs;
    s.mean_intervention_rate /= s.runs;
    out.push_back(std::move(s));
  }
  return out;
}

std::string render_summary(const std::vector<ConditionSummary>& summaries) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(3);
  for (const ConditionSummary& s : summaries) {
    os << s.condition << ": " << s.successes << "/" << s.runs << " succeeded"
       << " (95% CI " << 100 * s.success_ci.lo << "-" << 100 * s.success_ci.hi << "%)"
       << ", median turns " << s.median_turns << ", redundant rate " << s.mean_redundant_rate
       << ", intervention rate " << s.mean_intervention_rate << "\n";
    for (const auto& [p, n] : s.degenerate_counts) {
      os << "  pattern " << p << ": " << n << "\n";
    }
    for (const auto& [f, n] : s.failure_counts) {
      os << "  failure " << f << ": " << n << "\n";
    }
  }
  return os.str();
}

std::vector<RunRecord> load_records(const std::string& dir) {
  std::vector<RunRecord> out;
  if (!std::filesystem::exists(dir)) return out;
  std::vector<std::filesystem::path> paths;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    std::string name = entry.path().filename().string();
    if (name.size() > 12 && name.substr(name.size() - 12) == ".record.json") {
      paths.push_back(entry.path());
    }
  }
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) {
    std::ifstream in(p);
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (!j.is_discarded()) out.push_back(RunRecord::from_json(j));
  }
  return out;
}

}  // namespace apiot
