#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "apiot/bytes.hpp"
#include "apiot/device.hpp"
#include "apiot/rng.hpp"

namespace apiot {

enum class TopologyKind { T1FlatStar, T2PurdueSegmented, T3EdgeFogCloud, Mesh15 };

const char* to_string(TopologyKind k);
std::optional<TopologyKind> topology_from_string(const std::string& s);

struct Segment {
  std::string id;
  std::string subnet;  // "a.b.c.0/24"
};

struct Link {
  std::string seg_a;
  std::string seg_b;
  std::string gateway_id;  // forwarding device
};

struct ImpairmentProfile {
  double loss_prob = 0.0;
  double latency_ms = 0.0;
  double jitter_ms = 0.0;
  bool hmi_traffic = false;

  static ImpairmentProfile none() { return {0.0, 0.0, 0.0, false}; }
  static ImpairmentProfile medium() { return {0.05, 50.0, 10.0, false}; }
  static ImpairmentProfile heavy() { return {0.20, 200.0, 40.0, true}; }
};

struct IptablesDrop {
  Transport transport;
  uint16_t port;
  std::string dst_ip;
};
struct ModbusFcFilter {
  std::string dst_ip;
  std::set<uint8_t> blocked_fcs;
};
struct CoapRateLimit {
  std::string dst_ip;
  double max_per_s;
};
struct ProtocolBlock {
  std::string dst_ip;
  Protocol protocol;
};

struct DefensiveRule {
  uint64_t rule_id = 0;
  std::variant<IptablesDrop, ModbusFcFilter, CoapRateLimit, ProtocolBlock> kind;
  std::string installed_at;  // gateway device_id or segment id
  bool verified = false;
};

enum class OutcomeKind {
  Delivered,
  Dropped,          // silent; UDP only
  Refused,          // TCP, port closed / target down
  BlockedTimeout,   // TCP, dropped by a rule
  Timeout,          // TCP, no route
};

const char* to_string(OutcomeKind k);

struct DeliveryOutcome {
  OutcomeKind kind;
  std::optional<Bytes> response;
  double rtt_ms = 0.0;
  bool target_crashed = false;   // the delivered frame crashed the target
  bool target_silenced = false;  // a forwarded MQTT command silenced a device
};

enum class BuildError { MissingGateway, DuplicateIp, SubnetMismatch, BadRoster, SpawnFailed };

const char* to_string(BuildError e);

enum class RuleError { MalformedRule, NoInstallPoint };

struct BrokerMessage {
  double time_ms;
  std::string broker_ip;
  std::string topic;
  Bytes payload;
};

struct FrameObservation {
  double time_ms;
  std::string src_ip;
};

struct HmiFrame {
  std::string dst_ip;
  Bytes frame;
};

// One world = one deterministic discrete-event network. All mutation happens
// on a single logical thread; distinct worlds share nothing.
class World {
 public:
  TopologyKind kind() const { return kind_; }
  double now_ms() const { return clock_ms_; }
  const std::string& attacker_ip() const { return attacker_ip_; }
  const std::string& attacker_segment() const { return attacker_segment_; }
  const std::map<std::string, Segment>& segments() const { return segments_; }
  const std::vector<Link>& links() const { return links_; }
  const std::vector<DefensiveRule>& rules() const { return rules_; }
  const std::map<std::string, Bytes>& retained() const { return retained_; }
  const std::vector<BrokerMessage>& broker_log() const { return broker_log_; }

  Device* device(const std::string& ip);
  const Device* device(const std::string& ip) const;
  std::vector<const Device*> devices() const;

  DeliveryOutcome transmit(const std::string& src_ip, const std::string& dst_ip,
                           Transport transport, uint16_t port, const Bytes& frame);

  // Reachability/listener probe: no payload, same path/rule/loss handling.
  DeliveryOutcome probe(const std::string& src_ip, const std::string& dst_ip,
                        Transport transport, uint16_t port);

  Expected<uint64_t, RuleError> install_rule(DefensiveRule rule);

  // Picks the installation point on the attacker->dst path: the last gateway
  // crossed, or the destination's segment for same-segment paths.
  std::optional<std::string> default_install_point(const std::string& dst_ip) const;

  // Poisson background HMI polls; empty unless impairment.hmi_traffic.
  std::vector<HmiFrame> hmi_step(double dt_s);

  // Advances the virtual clock, ticking devices and routing telemetry.
  void advance(double dt_ms);

  bool reachable_from_attacker(const std::string& dst_ip) const;
  int attacker_frames_in_window(double window_s) const;
  std::vector<std::string> crashed_ips() const;

  // Internal publish path (telemetry and forwarded commands).
  void broker_accept_publish(const std::string& broker_ip, const std::string& topic,
                             const Bytes& payload, bool* silenced_someone = nullptr);

  double hmi_rate_per_s = 2.0;

  friend Expected<World, BuildError> build_topology(TopologyKind kind,
                                                    const std::vector<DeviceSpec>& roster,
                                                    const ImpairmentProfile& impairment,
                                                    uint64_t seed);

 private:
  std::optional<std::vector<std::string>> route_gateways(const std::string& src_seg,
                                                         const std::string& dst_seg) const;
  std::string segment_of_ip(const std::string& ip) const;
  bool rule_applies(const DefensiveRule& rule, const std::string& src_ip,
                    const std::string& dst_ip, Transport transport, uint16_t port,
                    const Bytes& frame, const std::vector<std::string>& path_gateways);
  void record_frame(const std::string& src_ip);

  TopologyKind kind_ = TopologyKind::T1FlatStar;
  std::map<std::string, Segment> segments_;
  std::vector<Link> links_;
  std::string attacker_ip_;
  std::string attacker_segment_;
  std::map<std::string, Device> devices_;  // by ip
  ImpairmentProfile impairment_;
  double clock_ms_ = 0.0;
  Rng rng_{0};
  std::vector<DefensiveRule> rules_;
  uint64_t next_rule_id_ = 1;
  std::map<std::string, Bytes> retained_;
  std::vector<BrokerMessage> broker_log_;
  std::vector<FrameObservation> frame_log_;
  // (rule_id, src_ip) -> (tokens, last_refill_ms)
  std::map<std::pair<uint64_t, std::string>, std::pair<double, double>> buckets_;
  std::string hmi_ip_;
};

Expected<World, BuildError> build_topology(TopologyKind kind,
                                           const std::vector<DeviceSpec>& roster,
                                           const ImpairmentProfile& impairment, uint64_t seed);

// Canonical desk-scale roster for a (protocol, topology) condition.
std::vector<DeviceSpec> default_roster(Protocol protocol, TopologyKind kind);

bool ip_in_subnet(const std::string& ip, const std::string& subnet);

}  // namespace apiot
