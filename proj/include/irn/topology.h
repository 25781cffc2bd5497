#ifndef IRN_TOPOLOGY_H_
#define IRN_TOPOLOGY_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "irn/units.h"

namespace irn {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct LinkParams {
  uint64_t bandwidth_bps = 40 * kGbps;
  SimTime propagation = 2 * kMicrosecond;
};

enum class NodeKind : uint8_t { kHost, kSwitch };

struct PortPeer {
  uint32_t node = 0;
  uint32_t port = 0;
};

struct Node {
  NodeKind kind = NodeKind::kSwitch;
  // Fat-tree tier: 0 host, 1 edge, 2 aggregation, 3 core. 0 elsewhere.
  int tier = 0;
  std::vector<PortPeer> ports;
};

// Hosts and switches joined by full-duplex links of uniform speed. Routing
// tables hold, per (switch, destination host), the ports on shortest paths.
class Topology {
 public:
  explicit Topology(LinkParams link = {}) : link_(link) {}

  uint32_t AddHost();
  uint32_t AddSwitch(int tier = 0);
  void Connect(uint32_t a, uint32_t b);
  // Computes routing. Throws ConfigError if some host pair is disconnected.
  void Finalize();

  const LinkParams& link() const { return link_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(uint32_t id) const { return nodes_[id]; }
  uint32_t num_hosts() const { return static_cast<uint32_t>(hosts_.size()); }
  uint32_t num_switches() const {
    return static_cast<uint32_t>(nodes_.size() - hosts_.size());
  }
  uint32_t HostNode(uint32_t host) const { return hosts_[host]; }
  // -1 for switches.
  int HostIndex(uint32_t node) const { return host_index_[node]; }
  bool finalized() const { return finalized_; }

  // Equal-cost next-hop ports from `node` towards `dst_host`.
  const std::vector<uint32_t>& NextHops(uint32_t node,
                                        uint32_t dst_host) const {
    return next_hops_[node * hosts_.size() + dst_host];
  }
  // Links on a shortest host-to-host path.
  uint32_t PathHops(uint32_t src_host, uint32_t dst_host) const;
  // Longest shortest path between any two hosts, in links.
  uint32_t DiameterHops() const { return diameter_; }
  uint32_t MaxSwitchPorts() const;

  // Round-trip bandwidth-delay product of the longest path, in bytes.
  uint64_t BdpBytes() const;

 private:
  LinkParams link_;
  std::vector<Node> nodes_;
  std::vector<uint32_t> hosts_;
  std::vector<int> host_index_;
  std::vector<std::vector<uint32_t>> next_hops_;
  std::vector<uint32_t> distance_;  // [dst_host * nodes + node]
  uint32_t diameter_ = 0;
  bool finalized_ = false;
};

// Three-tier fat tree of k-port switches: k pods, each with k/2 edge and k/2
// aggregation switches, (k/2)^2 cores, and k^3/4 hosts.
Topology BuildFatTree(int arity, LinkParams link = {});

// `switches` switches in a chain with one host hanging off each end. Every
// host-to-host route is unique.
Topology BuildLine(int switches, LinkParams link = {});

// One switch with `hosts` hosts attached.
Topology BuildStar(int hosts, LinkParams link = {});

// Flow-level ECMP: the port is a deterministic function of the flow's route
// key (derived from flow id and seed) and the switch.
uint32_t EcmpRoute(const Topology& topology, uint64_t route_key, uint32_t node,
                   uint32_t dst_host);

uint64_t RouteKey(uint64_t seed, uint64_t flow_id, uint32_t direction);

}  // namespace irn

#endif  // IRN_TOPOLOGY_H_
