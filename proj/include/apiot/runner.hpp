#pragma once

#include <map>
#include <string>
#include <vector>

#include "apiot/agent.hpp"
#include "apiot/netsim.hpp"
#include "apiot/record.hpp"
#include "apiot/telemetry.hpp"

namespace apiot {

struct RunConfig {
  Protocol protocol = Protocol::CoAP;
  TopologyKind topology = TopologyKind::T1FlatStar;
  std::string impairment = "none";  // none | medium | heavy
  PolicyKind policy = PolicyKind::Scripted;
  bool overseer_on = true;
  int replicates = 1;
  uint64_t master_seed = 42;
  int turn_cap = 60;
  std::string out_dir = "out";

  nlohmann::json to_json() const;
  // "coap-t1-none-scripted-on"
  std::string condition_tag() const;
};

ImpairmentProfile impairment_from_string(const std::string& name);

// key=value lines, '#' comments, optional [section] headers (ignored).
RunConfig parse_run_config_ini(const std::string& text, const RunConfig& base = {});

// Deterministic per-replicate seed derived from the condition and master seed.
uint64_t derive_run_seed(const RunConfig& cfg, int replicate);

// One complete mission for replicate `r` of the condition.
RunRecord execute_run(const RunConfig& cfg, int replicate);

// Writes <run_id>.jsonl and <run_id>.record.json under cfg.out_dir.
void write_run_artifacts(const RunConfig& cfg, const RunRecord& record);

// N replicates of a single condition; artifacts written if write_files.
std::vector<RunRecord> run_condition(const RunConfig& cfg, bool write_files);

// Full sweep: protocols x topologies x overseer on/off, replicated, executed
// in a seed-shuffled order. Also writes manifest.json.
std::vector<RunRecord> run_matrix(const RunConfig& base, bool write_files);

// Per-condition summary over a set of records.
struct ConditionSummary {
  std::string condition;
  int runs = 0;
  int successes = 0;
  WilsonInterval success_ci;
  double median_turns = 0;
  double mean_redundant_rate = 0;
  double mean_intervention_rate = 0;
  std::map<std::string, int> degenerate_counts;
  std::map<std::string, int> failure_counts;
};

std::vector<ConditionSummary> summarize(const std::vector<RunRecord>& records);
std::string render_summary(const std::vector<ConditionSummary>& summaries);

// Loads every *.record.json under dir.
std::vector<RunRecord> load_records(const std::string& dir);

}  // namespace apiot
