#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "apiot/mission.hpp"
#include "apiot/netsim.hpp"

#include "json.hpp"

namespace apiot {

// Appendix-style two-phase roster: 4 recon (both phases), 8 red, 6 blue,
// 3 Linux-host tools that this lab build stubs out.
inline constexpr std::array<std::string_view, 21> kToolRoster = {
    "get_network_state", "get_actionable_targets", "stealth_check", "inspect_lab",
    "coap_send", "modbus_request", "tcp_send", "udp_send",
    "mqtt_publish", "mqtt_subscribe", "verify_crash", "verify_shell",
    "iptables_rule", "modbus_fc_filter", "coap_rate_limit", "verify_patch",
    "list_patches", "protocol_block",
    "run_command", "remote_exec", "create_tool",
};

bool is_recon_tool(const std::string& name);
bool is_red_tool(const std::string& name);
bool is_blue_tool(const std::string& name);
bool is_offensive_tool(const std::string& name);  // red tools that emit frames
bool is_unsupported_tool(const std::string& name);

struct ToolCall {
  int turn = 0;
  std::string tool;
  std::string target_ip;
  nlohmann::json args = nlohmann::json::object();

  // Stable under key reordering: nlohmann objects serialize with sorted keys.
  std::string args_digest() const;
};

enum class ToolStatus { Ok, NoResponse, Blocked, Error, Unsupported };

const char* to_string(ToolStatus s);

struct ToolResult {
  ToolStatus status = ToolStatus::Ok;
  nlohmann::json observation = nlohmann::json::object();
  std::string message;
  double duration_ms = 0;

  // Side-channel annotations for telemetry (never shown to the agent).
  bool crash_capable_frame = false;
  bool exploit_succeeded = false;
  std::optional<Protocol> protocol_used;
};

// Dispatches one call against the world + mission. Callers serialize all
// execution per mission.
ToolResult execute_tool(World& world, MissionState& mission, const ToolCall& call);

// Machine-readable parameter schemas for the LLM backend; versioned and
// snapshot-tested.
nlohmann::json tool_schemas();

}  // namespace apiot
