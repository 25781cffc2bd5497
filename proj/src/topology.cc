#include "irn/topology.h"

#include <algorithm>
#include <deque>
#include <limits>

#include "irn/rng.h"

namespace irn {

namespace {
constexpr uint32_t kUnreachable = std::numeric_limits<uint32_t>::max();
}  // namespace

uint32_t Topology::AddHost() {
  const uint32_t id = static_cast<uint32_t>(nodes_.size());
  nodes_.push_back(Node{NodeKind::kHost, 0, {}});
  host_index_.push_back(static_cast<int>(hosts_.size()));
  hosts_.push_back(id);
  finalized_ = false;
  return id;
}

uint32_t Topology::AddSwitch(int tier) {
  const uint32_t id = static_cast<uint32_t>(nodes_.size());
  nodes_.push_back(Node{NodeKind::kSwitch, tier, {}});
  host_index_.push_back(-1);
  finalized_ = false;
  return id;
}

void Topology::Connect(uint32_t a, uint32_t b) {
  if (a >= nodes_.size() || b >= nodes_.size() || a == b) {
    throw ConfigError("invalid link endpoints");
  }
  Node& na = nodes_[a];
  Node& nb = nodes_[b];
  if (na.kind == NodeKind::kHost && !na.ports.empty()) {
    throw ConfigError("hosts have a single NIC port");
  }
  if (nb.kind == NodeKind::kHost && !nb.ports.empty()) {
    throw ConfigError("hosts have a single NIC port");
  }
  const uint32_t pa = static_cast<uint32_t>(na.ports.size());
  const uint32_t pb = static_cast<uint32_t>(nb.ports.size());
  na.ports.push_back(PortPeer{b, pb});
  nb.ports.push_back(PortPeer{a, pa});
  finalized_ = false;
}

void Topology::Finalize() {
  if (link_.bandwidth_bps == 0 || link_.propagation < 0) {
    throw ConfigError("link bandwidth must be positive");
  }
  if (hosts_.size() < 2) throw ConfigError("topology needs at least 2 hosts");
  for (const Node& n : nodes_) {
    if (n.ports.size() > 64) throw ConfigError("switch port count above 64");
  }
  const size_t num_nodes = nodes_.size();
  const size_t num_hosts = hosts_.size();
  distance_.assign(num_hosts * num_nodes, kUnreachable);
  next_hops_.assign(num_nodes * num_hosts, {});

  // BFS from each destination host; hosts never forward transit traffic.
  for (uint32_t dst = 0; dst < num_hosts; ++dst) {
    uint32_t* dist = &distance_[dst * num_nodes];
    std::deque<uint32_t> frontier;
    dist[hosts_[dst]] = 0;
    frontier.push_back(hosts_[dst]);
    while (!frontier.empty()) {
      const uint32_t u = frontier.front();
      frontier.pop_front();
      if (u != hosts_[dst] && nodes_[u].kind == NodeKind::kHost) continue;
      for (const PortPeer& peer : nodes_[u].ports) {
        if (dist[peer.node] == kUnreachable) {
          dist[peer.node] = dist[u] + 1;
          frontier.push_back(peer.node);
        }
      }
    }
    for (uint32_t u = 0; u < num_nodes; ++u) {
      if (u == hosts_[dst] || dist[u] == kUnreachable) continue;
      auto& hops = next_hops_[u * num_hosts + dst];
      const auto& ports = nodes_[u].ports;
      for (uint32_t p = 0; p < ports.size(); ++p) {
        const uint32_t v = ports[p].node;
        const bool transit_ok =
            nodes_[v].kind == NodeKind::kSwitch || v == hosts_[dst];
        if (transit_ok && dist[v] + 1 == dist[u]) hops.push_back(p);
      }
    }
  }

  diameter_ = 0;
  for (uint32_t dst = 0; dst < num_hosts; ++dst) {
    for (uint32_t src = 0; src < num_hosts; ++src) {
      const uint32_t d = distance_[dst * num_nodes + hosts_[src]];
      if (d == kUnreachable) {
        throw ConfigError("host " + std::to_string(src) +
                          " cannot reach host " + std::to_string(dst));
      }
      diameter_ = std::max(diameter_, d);
    }
  }
  finalized_ = true;
}

uint32_t Topology::PathHops(uint32_t src_host, uint32_t dst_host) const {
  return distance_[dst_host * nodes_.size() + hosts_[src_host]];
}

uint32_t Topology::MaxSwitchPorts() const {
  size_t m = 0;
  for (const Node& n : nodes_) {
    if (n.kind == NodeKind::kSwitch) m = std::max(m, n.ports.size());
  }
  return static_cast<uint32_t>(m);
}

uint64_t Topology::BdpBytes() const {
  return BytesInFlight(link_.bandwidth_bps,
                       2 * static_cast<SimTime>(diameter_) * link_.propagation);
}

Topology BuildFatTree(int k, LinkParams link) {
  if (k < 4 || k % 2 != 0) {
    throw ConfigError("fat-tree arity must be even and >= 4, got " +
                      std::to_string(k));
  }
  Topology topo(link);
  const int half = k / 2;
  std::vector<uint32_t> cores;
  for (int c = 0; c < half * half; ++c) cores.push_back(topo.AddSwitch(3));
  for (int pod = 0; pod < k; ++pod) {
    std::vector<uint32_t> aggs;
    for (int a = 0; a < half; ++a) {
      const uint32_t agg = topo.AddSwitch(2);
      aggs.push_back(agg);
      // Aggregation switch a of every pod reaches cores [a*half, a*half+half).
      for (int c = 0; c < half; ++c) topo.Connect(agg, cores[a * half + c]);
    }
    for (int e = 0; e < half; ++e) {
      const uint32_t edge = topo.AddSwitch(1);
      for (int h = 0; h < half; ++h) topo.Connect(topo.AddHost(), edge);
      for (uint32_t agg : aggs) topo.Connect(edge, agg);
    }
  }
  topo.Finalize();
  return topo;
}

Topology BuildLine(int switches, LinkParams link) {
  if (switches < 1) throw ConfigError("line needs at least one switch");
  Topology topo(link);
  const uint32_t left = topo.AddHost();
  uint32_t prev = left;
  for (int i = 0; i < switches; ++i) {
    const uint32_t sw = topo.AddSwitch();
    topo.Connect(prev, sw);
    prev = sw;
  }
  topo.Connect(prev, topo.AddHost());
  topo.Finalize();
  return topo;
}

Topology BuildStar(int hosts, LinkParams link) {
  Topology topo(link);
  const uint32_t sw = topo.AddSwitch(1);
  for (int i = 0; i < hosts; ++i) topo.Connect(topo.AddHost(), sw);
  topo.Finalize();
  return topo;
}

uint64_t RouteKey(uint64_t seed, uint64_t flow_id, uint32_t direction) {
  return HashCombine(HashCombine(seed, static_cast<uint64_t>(RngStream::kEcmp)),
                     flow_id * 2 + direction);
}

uint32_t EcmpRoute(const Topology& topology, uint64_t route_key,
                   uint32_t node, uint32_t dst_host) {
  const auto& hops = topology.NextHops(node, dst_host);
  if (hops.size() == 1) return hops[0];
  if (hops.empty()) throw ConfigError("no route");
  const uint64_t h = HashCombine(route_key, node);
  return hops[static_cast<uint64_t>((static_cast<unsigned __int128>(h) *
                                     hops.size()) >>
                                    64)];
}

}  // namespace irn
