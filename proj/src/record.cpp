#include "apiot/record.hpp"

namespace apiot {

nlohmann::json TurnLogRow::to_json() const {
  return {{"run_id", run_id},
          {"turn", turn},
          {"phase", phase},
          {"tool", tool},
          {"target_ip", target_ip},
          {"args_digest", args_digest},
          {"verdict", verdict},
          {"result_status", result_status},
          {"sim_time_ms", sim_time_ms},
          {"tokens_est", tokens_est}};
}

TurnLogRow TurnLogRow::from_json(const nlohmann::json& j) {
  TurnLogRow r;
  r.run_id = j.at("run_id").get<std::string>();
  r.turn = j.at("turn").get<int>();
  r.phase = j.at("phase").get<std::string>();
  r.tool = j.at("tool").get<std::string>();
  r.target_ip = j.at("target_ip").get<std::string>();
  r.args_digest = j.at("args_digest").get<std::string>();
  r.verdict = j.at("verdict").get<std::string>();
  r.result_status = j.at("result_status").get<std::string>();
  r.sim_time_ms = j.at("sim_time_ms").get<double>();
  r.tokens_est = j.at("tokens_est").get<int>();
  return r;
}

FindingRecord to_record(const Finding& f) {
  FindingRecord r;
  r.finding_id = f.finding_id;
  r.target_ip = f.target_ip;
  r.vuln = to_string(f.vuln);
  r.confirmed = f.confirmed;
  r.exploit_turn = f.exploit_turn;
  r.confirmed_turn = f.confirmed_turn;
  r.exploit_time_ms = f.exploit_time_ms;
  return r;
}

PatchRecord to_record(const Patch& p) {
  PatchRecord r;
  r.patch_id = p.patch_id;
  r.finding_id = p.finding_id;
  r.verified = p.verified;
  r.orphan = p.orphan;
  r.verified_turn = p.verified_turn;
  r.verified_time_ms = p.verified_time_ms;
  return r;
}

nlohmann::json RunRecord::to_json() const {
  nlohmann::json j;
  j["run_id"] = run_id;
  j["config"] = config;
  j["status"] = status;
  j["abort_reason"] = abort_reason;
  j["turns"] = turns;
  j["blue_entered_turn"] = blue_entered_turn;
  j["sim_end_ms"] = sim_end_ms;
  j["turn_log"] = nlohmann::json::array();
  for (const auto& row : turn_log) j["turn_log"].push_back(row.to_json());
  j["injections"] = nlohmann::json::array();
  for (const auto& inj : injections) {
    j["injections"].push_back({{"turn", inj.turn}, {"kind", inj.kind}, {"message", inj.message}});
  }
  j["annotations"] = nlohmann::json::array();
  for (const auto& a : annotations) {
    nlohmann::json aj = {{"turn", a.turn},
                         {"tool", a.tool},
                         {"target_ip", a.target_ip},
                         {"digest", a.digest},
                         {"blocked", a.blocked},
                         {"offensive", a.offensive},
                         {"crash_capable", a.crash_capable},
                         {"exploit_succeeded", a.exploit_succeeded}};
    if (a.protocol_used) aj["protocol_used"] = *a.protocol_used;
    if (a.protocol_match) aj["protocol_match"] = *a.protocol_match;
    j["annotations"].push_back(aj);
  }
  j["findings"] = nlohmann::json::array();
  for (const auto& f : findings) {
    j["findings"].push_back({{"finding_id", f.finding_id},
                             {"target_ip", f.target_ip},
                             {"vuln", f.vuln},
                             {"confirmed", f.confirmed},
                             {"exploit_turn", f.exploit_turn},
                             {"confirmed_turn", f.confirmed_turn},
                             {"exploit_time_ms", f.exploit_time_ms}});
  }
  j["patches"] = nlohmann::json::array();
  for (const auto& p : patches) {
    j["patches"].push_back({{"patch_id", p.patch_id},
                            {"finding_id", p.finding_id},
                            {"verified", p.verified},
                            {"orphan", p.orphan},
                            {"verified_turn", p.verified_turn},
                            {"verified_time_ms", p.verified_time_ms}});
  }
  j["crashed_at_end"] = crashed_at_end;
  return j;
}

RunRecord RunRecord::from_json(const nlohmann::json& j) {
  RunRecord r;
  r.run_id = j.at("run_id").get<std::string>();
  r.config = j.value("config", nlohmann::json::object());
  r.status = j.at("status").get<std::string>();
  r.abort_reason = j.value("abort_reason", "");
  r.turns = j.at("turns").get<int>();
  r.blue_entered_turn = j.value("blue_entered_turn", -1);
  r.sim_end_ms = j.value("sim_end_ms", 0.0);
  for (const auto& row : j.value("turn_log", nlohmann::json::array())) {
    r.turn_log.push_back(TurnLogRow::from_json(row));
  }
  for (const auto& inj : j.value("injections", nlohmann::json::array())) {
    r.injections.push_back({inj.at("turn").get<int>(), inj.at("kind").get<std::string>(),
                            inj.value("message", "")});
  }
  for (const auto& aj : j.value("annotations", nlohmann::json::array())) {
    CallAnnotation a;
    a.turn = aj.at("turn").get<int>();
    a.tool = aj.at("tool").get<std::string>();
    a.target_ip = aj.value("target_ip", "");
    a.digest = aj.value("digest", "");
    a.blocked = aj.value("blocked", false);
    a.offensive = aj.value("offensive", false);
    a.crash_capable = aj.value("crash_capable", false);
    a.exploit_succeeded = aj.value("exploit_succeeded", false);
    if (aj.contains("protocol_used")) a.protocol_used = aj["protocol_used"].get<std::string>();
    if (aj.contains("protocol_match")) a.protocol_match = aj["protocol_match"].get<bool>();
    r.annotations.push_back(std::move(a));
  }
  for (const auto& fj : j.value("findings", nlohmann::json::array())) {
    FindingRecord f;
    f.finding_id = fj.at("finding_id").get<int>();
    f.target_ip = fj.at("target_ip").get<std::string>();
    f.vuln = fj.at("vuln").get<std::string>();
    f.confirmed = fj.value("confirmed", false);
    f.exploit_turn = fj.value("exploit_turn", -1);
    f.confirmed_turn = fj.value("confirmed_turn", -1);
    f.exploit_time_ms = fj.value("exploit_time_ms", 0.0);
    r.findings.push_back(std::move(f));
  }
  for (const auto& pj : j.value("patches", nlohmann::json::array())) {
    PatchRecord p;
    p.patch_id = pj.at("patch_id").get<int>();
    p.finding_id = pj.value("finding_id", -1);
    p.verified = pj.value("verified", false);
    p.orphan = pj.value("orphan", false);
    p.verified_turn = pj.value("verified_turn", -1);
    p.verified_time_ms = pj.value("verified_time_ms", 0.0);
    r.patches.push_back(std::move(p));
  }
  for (const auto& ip : j.value("crashed_at_end", nlohmann::json::array())) {
    r.crashed_at_end.push_back(ip.get<std::string>());
  }
  return r;
}

}  // namespace apiot
