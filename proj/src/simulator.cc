#include "irn/simulator.h"

#include <algorithm>
#include <deque>
#include <map>
#include <memory>
#include <set>
#include <tuple>

#include "irn/congestion_control.h"
#include "irn/event_queue.h"
#include "irn/gbn_transport.h"
#include "irn/irn_transport.h"
#include "irn/rng.h"
#include "irn/switch_port.h"

namespace irn {

std::string_view ProtocolName(Protocol p) {
  return p == Protocol::kIrn ? "irn" : "gbn";
}

Topology BuildTopology(const RunConfig& config) {
  if (config.topology) {
    Topology t = *config.topology;
    if (!t.finalized()) t.Finalize();
    return t;
  }
  return BuildFatTree(config.fabric.arity, config.fabric.link);
}

namespace {

constexpr uint32_t kWriteOverhead = 16;
constexpr uint32_t kSendOverhead = 6;
constexpr uint32_t kMaxMessagePackets = 1u << 22;

}  // namespace

ResolvedParams Resolve(const RunConfig& config, const Topology& topology) {
  const TransportSettings& t = config.transport;
  const FabricSettings& f = config.fabric;
  const LinkParams& link = topology.link();
  if (link.bandwidth_bps == 0) throw ConfigError("bandwidth must be positive");
  if (link.propagation < 0) throw ConfigError("propagation delay is negative");
  if (t.mtu == 0) throw ConfigError("mtu must be positive");
  if (t.ack_bytes == 0 || t.read_request_bytes == 0) {
    throw ConfigError("control packet sizes must be positive");
  }
  if (t.rto_low <= 0) throw ConfigError("rto_low must be positive");

  ResolvedParams r;
  r.hosts = topology.num_hosts();
  r.diameter_hops = topology.DiameterHops();
  r.bdp_bytes = topology.BdpBytes();
  const uint32_t base_packet = t.mtu + t.data_header_bytes;
  r.bdp_cap = t.bdp_cap != 0
                  ? t.bdp_cap
                  : std::max<uint32_t>(
                        1, static_cast<uint32_t>(r.bdp_bytes / base_packet));
  r.bdp_fc = t.bdp_fc.value_or(t.protocol == Protocol::kIrn);
  r.max_wire_packet =
      std::max({base_packet + (t.header_overhead ? kWriteOverhead : 0),
                t.ack_bytes, t.read_request_bytes});
  r.buffer_bytes = f.buffer_bytes != 0 ? f.buffer_bytes : 2 * r.bdp_bytes;
  if (r.buffer_bytes < r.max_wire_packet) {
    throw ConfigError("switch buffer smaller than one packet");
  }
  r.headroom_bytes = PfcHeadroom(link, r.max_wire_packet);
  if (f.pause_threshold != 0) {
    r.pause_threshold = f.pause_threshold;
  } else if (r.buffer_bytes > r.headroom_bytes) {
    r.pause_threshold = r.buffer_bytes - r.headroom_bytes;
  } else if (f.pfc) {
    throw ConfigError("buffer too small for the PFC headroom");
  }
  r.resume_threshold =
      f.resume_threshold != 0 ? f.resume_threshold : r.pause_threshold;
  if (f.pfc && (r.pause_threshold > r.buffer_bytes ||
                r.resume_threshold > r.pause_threshold)) {
    throw ConfigError("PFC thresholds must satisfy resume <= pause <= buffer");
  }
  r.rto_high = t.rto_high != 0
                   ? t.rto_high
                   : 2 * static_cast<SimTime>(r.diameter_hops) *
                             link.propagation +
                         static_cast<SimTime>(topology.MaxSwitchPorts()) *
                             SerializationTime(r.buffer_bytes,
                                               link.bandwidth_bps);
  if (t.rto_high_scale <= 0) throw ConfigError("rto_high_scale must be positive");
  r.rto_high = static_cast<SimTime>(static_cast<double>(r.rto_high) *
                                    t.rto_high_scale);
  if (t.protocol == Protocol::kIrn && t.dual_timeout &&
      r.rto_high < t.rto_low) {
    throw ConfigError("rto_high must not be below rto_low");
  }
  r.timeouts = t.timeouts.value_or(!f.pfc);
  if (!CcRegistry::Global().Contains(config.cc)) {
    throw ConfigError("unknown congestion control scheme '" + config.cc + "'");
  }
  if (config.loss.data_drop_probability < 0 ||
      config.loss.data_drop_probability >= 1) {
    throw ConfigError("drop probability must lie in [0, 1)");
  }
  if (config.duration && *config.duration <= 0) {
    throw ConfigError("duration must be positive");
  }
  return r;
}

std::vector<FlowSpec> BuildFlows(const RunConfig& config,
                                 const Topology& topology) {
  const uint32_t hosts = topology.num_hosts();
  std::vector<FlowSpec> flows;
  if (config.flows) {
    flows = *config.flows;
  } else {
    const WorkloadSettings& w = config.workload;
    std::vector<FlowSpec> background;
    if (w.flows > 0) {
      background = GenerateFlows(w.sizes, w.load, hosts,
                                 topology.link().bandwidth_bps, config.seed,
                                 w.flows, w.mix);
    }
    std::vector<FlowSpec> incast;
    if (w.incast_fan_in > 0) {
      incast = GenerateIncast(w.incast_fan_in, w.incast_bytes, hosts,
                              config.seed, w.incast_start, w.incast_dst);
    }
    flows = MergeFlows(std::move(background), std::move(incast));
  }
  std::set<uint32_t> ids;
  for (const FlowSpec& f : flows) {
    if (f.src >= hosts || f.dst >= hosts || f.src == f.dst) {
      throw ConfigError("flow " + std::to_string(f.id) +
                        " has invalid endpoints");
    }
    if (f.size == 0) throw ConfigError("flow " + std::to_string(f.id) + " is empty");
    if (f.size / config.transport.mtu >= kMaxMessagePackets) {
      throw ConfigError("flow " + std::to_string(f.id) + " is too large");
    }
    if (f.arrival < 0) throw ConfigError("negative flow arrival time");
    if (!ids.insert(f.id).second) {
      throw ConfigError("duplicate flow id " + std::to_string(f.id));
    }
  }
  return flows;
}

namespace {

enum class PktType : uint8_t { kData, kAck };

struct Packet {
  PktType type = PktType::kData;
  uint8_t channel = 0;
  uint32_t flow = 0;
  uint32_t dst_host = 0;
  uint32_t wire_bytes = 0;
  uint64_t route_key = 0;
  Psn psn;
  SeqFlags flags;
  AckPacket ack;
};

// One direction of transfer within a flow: channel 0 carries Write/Send data
// or the Read request; channel 1 carries Read response data.
struct Channel {
  uint32_t flow = 0;
  uint8_t index = 0;
  uint32_t tx_host = 0;
  uint32_t rx_host = 0;
  uint32_t packets = 0;
  uint32_t last_payload = 0;
  uint32_t header_bytes = 0;  // added to each data payload on the wire
  uint64_t data_key = 0;
  uint64_t ack_key = 0;
  uint32_t delivered = 0;
  bool active = false;
  bool in_ready = false;

  std::unique_ptr<TransportSender> sender;
  std::unique_ptr<TransportReceiver> receiver;
  std::unique_ptr<CongestionControl> cc;

  SimTime blocked_until = 0;
  bool wake_pending = false;
  int64_t held = -1;  // retransmission waiting out the fetch delay
  SimTime held_ready = 0;

  bool timer_armed = false;
  SimTime timer_deadline = 0;
  uint32_t timer_gen = 0;
  bool timer_event_pending = false;
  SimTime timer_event_time = 0;
};

struct HostState {
  bool busy = false;
  bool paused = false;
  std::deque<uint32_t> acks;
  std::deque<uint32_t> ready;  // channel indices
};

struct OutputPort {
  bool busy = false;
  bool paused = false;
  uint32_t in_service_input = 0;
  uint32_t in_service_bytes = 0;
  OutputArbiter arbiter;
};

struct SwitchState {
  std::vector<IngressBuffer> ingress;
  std::vector<std::vector<std::deque<uint32_t>>> voq;  // [input][output]
  std::vector<OutputPort> out;
};

class Simulation {
 public:
  Simulation(const RunConfig& config, Topology topology)
      : config_(config),
        topo_(std::move(topology)),
        params_(Resolve(config_, topo_)),
        flows_(BuildFlows(config_, topo_)),
        loss_rng_(config.seed, RngStream::kLossInjection) {
    const auto& nodes = topo_.nodes();
    host_of_node_.assign(nodes.size(), -1);
    switch_of_node_.assign(nodes.size(), -1);
    hosts_.resize(topo_.num_hosts());
    PfcConfig pfc{config_.fabric.pfc, params_.buffer_bytes,
                  params_.pause_threshold, params_.resume_threshold};
    for (uint32_t n = 0; n < nodes.size(); ++n) {
      if (nodes[n].kind == NodeKind::kHost) {
        host_of_node_[n] = topo_.HostIndex(n);
        continue;
      }
      switch_of_node_[n] = static_cast<int>(switches_.size());
      SwitchState s;
      const size_t ports = nodes[n].ports.size();
      s.ingress.assign(ports, IngressBuffer(pfc));
      s.voq.assign(ports, std::vector<std::deque<uint32_t>>(ports));
      s.out.resize(ports);
      switches_.push_back(std::move(s));
    }
    channels_.resize(flows_.size() * 2);
    completion_.assign(flows_.size(), -1);
    flow_drops_.assign(flows_.size(), 0);
    for (const DropRule& r : config_.loss.rules) {
      drop_rules_[{r.flow, r.channel, r.packet}].insert(r.occurrence);
    }
  }

  RunResult Execute() {
    for (uint32_t i = 0; i < flows_.size(); ++i) {
      q_.Schedule(flows_[i].arrival, EventKind::kFlowArrival, i);
    }
    const SimTime limit =
        config_.duration ? *config_.duration : config_.time_limit;
    while (!q_.empty()) {
      if (!config_.duration && completed_ == flows_.size()) break;
      if (q_.PeekTime() > limit) break;
      Dispatch(q_.Pop());
    }
    return Collect();
  }

 private:
  uint32_t NewPacket() {
    if (free_packets_.empty()) {
      packets_.emplace_back();
      return static_cast<uint32_t>(packets_.size() - 1);
    }
    const uint32_t id = free_packets_.back();
    free_packets_.pop_back();
    packets_[id] = Packet{};
    return id;
  }
  void FreePacket(uint32_t id) { free_packets_.push_back(id); }

  SimTime now() const { return q_.now(); }

  void Dispatch(const Event& e) {
    switch (e.kind) {
      case EventKind::kPacketArrival:
        if (host_of_node_[e.target] >= 0) {
          HostReceive(static_cast<uint32_t>(host_of_node_[e.target]), e.arg1);
        } else {
          SwitchReceive(e.target, e.arg0, e.arg1);
        }
        break;
      case EventKind::kLinkFree:
        LinkFree(e.target, e.arg0);
        break;
      case EventKind::kPfcFrame:
        OnPfc(e.target, e.arg0, e.arg1 != 0);
        break;
      case EventKind::kTimer:
        OnTimer(e.target, e.arg0);
        break;
      case EventKind::kFlowArrival:
        StartFlow(e.target);
        break;
      case EventKind::kHostWake: {
        Channel& c = channels_[e.target];
        c.wake_pending = false;
        MakeReady(e.target);
        TryHost(c.tx_host);
        break;
      }
      case EventKind::kUser:
        break;
    }
  }

  // --- flows and channels ---------------------------------------------------

  void InitChannel(uint32_t idx, uint32_t flow, uint8_t index, uint32_t tx,
                   uint32_t rx, uint64_t bytes, uint32_t mtu, uint32_t header) {
    const TransportSettings& t = config_.transport;
    Channel& c = channels_[idx];
    c.flow = flow;
    c.index = index;
    c.tx_host = tx;
    c.rx_host = rx;
    c.packets = static_cast<uint32_t>((bytes + mtu - 1) / mtu);
    c.last_payload = static_cast<uint32_t>(bytes - uint64_t{c.packets - 1} * mtu);
    c.header_bytes = header;
    c.data_key = RouteKey(config_.seed, idx, 0);
    c.ack_key = RouteKey(config_.seed, idx, 1);
    const TimerConfig timer{t.rto_low, params_.rto_high, t.n_small,
                            t.dual_timeout};
    if (t.protocol == Protocol::kIrn) {
      IrnSenderConfig sc;
      sc.bdp_cap = params_.bdp_cap;
      sc.bdp_fc = params_.bdp_fc;
      sc.bitmap_capacity =
          params_.bdp_fc ? 0 : std::max(c.packets, params_.bdp_cap);
      sc.timer = timer;
      c.sender = std::make_unique<IrnSender>(sc, c.packets);
      c.receiver = std::make_unique<IrnReceiver>(
          params_.bdp_fc ? params_.bdp_cap : std::max(c.packets, params_.bdp_cap));
    } else {
      GbnSenderConfig gc;
      gc.bdp_fc = params_.bdp_fc;
      gc.bdp_cap = params_.bdp_cap;
      gc.timer = timer;
      gc.timer.dual = false;
      gc.loss_backoff = t.loss_backoff;
      c.sender = std::make_unique<GbnSender>(gc, c.packets);
      c.receiver = std::make_unique<GbnReceiver>();
    }
    c.cc = CcRegistry::Global().Create(
        config_.cc, CcParams{params_.bdp_cap, config_.cc_slow_start});
  }

  void StartFlow(uint32_t f) {
    const FlowSpec& spec = flows_[f];
    const TransportSettings& t = config_.transport;
    const uint32_t overhead =
        !t.header_overhead              ? 0
        : spec.kind == OpKind::kWrite ? kWriteOverhead
        : spec.kind == OpKind::kSend  ? kSendOverhead
                                      : 0;
    if (spec.kind == OpKind::kRead) {
      // A one-packet request; the response flows back on channel 1.
      InitChannel(2 * f, f, 0, spec.src, spec.dst, t.read_request_bytes,
                  t.read_request_bytes, 0);
      InitChannel(2 * f + 1, f, 1, spec.dst, spec.src, spec.size, t.mtu,
                  t.data_header_bytes);
    } else {
      InitChannel(2 * f, f, 0, spec.src, spec.dst, spec.size, t.mtu,
                  t.data_header_bytes + overhead);
    }
    channels_[2 * f].active = true;
    MakeReady(2 * f);
    TryHost(spec.src);
  }

  void ChannelDelivered(Channel& c) {
    const FlowSpec& spec = flows_[c.flow];
    if (spec.kind == OpKind::kRead && c.index == 0) {
      Channel& resp = channels_[2 * c.flow + 1];
      resp.active = true;
      MakeReady(2 * c.flow + 1);
      TryHost(resp.tx_host);
      return;
    }
    completion_[c.flow] = now();
    ++completed_;
  }

  void CheckBdp(const Channel& c) {
    counters_.max_in_flight =
        std::max<uint64_t>(counters_.max_in_flight, c.sender->InFlight());
    if (params_.bdp_fc && c.sender->InFlight() > params_.bdp_cap) {
      ++counters_.bdp_violations;
    }
  }

  void MakeReady(uint32_t idx) {
    Channel& c = channels_[idx];
    if (!c.active || c.in_ready) return;
    c.in_ready = true;
    hosts_[c.tx_host].ready.push_back(idx);
  }

  void ScheduleWake(uint32_t idx, SimTime at) {
    Channel& c = channels_[idx];
    if (c.wake_pending) return;
    c.wake_pending = true;
    q_.Schedule(at, EventKind::kHostWake, idx);
  }

  // Next packet the channel wants on the wire now, or -1.
  int64_t NextPacket(uint32_t idx) {
    Channel& c = channels_[idx];
    if (now() < c.blocked_until) {
      ScheduleWake(idx, c.blocked_until);
      return -1;
    }
    if (c.held >= 0) {
      if (now() < c.held_ready) {
        ScheduleWake(idx, c.held_ready);
        return -1;
      }
      const int64_t id = c.held;
      c.held = -1;
      return id;
    }
    const bool allowed = c.cc->AllowSend(c.sender->InFlight());
    const std::optional<TxDecision> d = c.sender->TxFree(allowed);
    CheckBdp(c);
    if (!d) return -1;
    const uint32_t id = NewPacket();
    Packet& p = packets_[id];
    p.type = PktType::kData;
    p.channel = c.index;
    p.flow = c.flow;
    p.dst_host = c.rx_host;
    p.route_key = c.data_key;
    p.psn = d->psn;
    const bool last = d->psn.value() + 1 == c.packets;
    p.flags.msn_update = last;
    p.wire_bytes =
        (last ? c.last_payload : config_.transport.mtu) + c.header_bytes;
    if (c.index == 0 && flows_[c.flow].kind == OpKind::kRead) {
      p.wire_bytes = config_.transport.read_request_bytes;
    }
    if (params_.timeouts && !c.timer_armed) {
      ArmTimer(idx, c.sender->ArmTimer());
    }
    if (const auto rate = c.cc->PacingRate()) {
      c.blocked_until =
          now() + static_cast<SimTime>(p.wire_bytes * 8e9 / *rate);
    }
    if (d->retransmission && config_.transport.retx_fetch_delay > 0) {
      c.held = id;
      c.held_ready = now() + config_.transport.retx_fetch_delay;
      ScheduleWake(idx, c.held_ready);
      return -1;
    }
    return id;
  }

  // --- timers ---------------------------------------------------------------

  void ArmTimer(uint32_t idx, SimTime duration) {
    Channel& c = channels_[idx];
    c.timer_armed = true;
    c.timer_deadline = now() + duration;
    // Restarts only move the deadline; a pending event re-checks it.
    if (!c.timer_event_pending || c.timer_event_time > c.timer_deadline) {
      ++c.timer_gen;
      c.timer_event_pending = true;
      c.timer_event_time = c.timer_deadline;
      q_.Schedule(c.timer_deadline, EventKind::kTimer, idx, c.timer_gen);
    }
  }

  void RestartTimer(uint32_t idx) {
    Channel& c = channels_[idx];
    if (!params_.timeouts) return;
    if (c.sender->InFlight() == 0) {
      c.timer_armed = false;
      return;
    }
    ArmTimer(idx, c.sender->ArmTimer());
  }

  void OnTimer(uint32_t idx, uint32_t gen) {
    Channel& c = channels_[idx];
    if (gen != c.timer_gen) return;
    c.timer_event_pending = false;
    if (!c.timer_armed) return;
    if (now() < c.timer_deadline) {
      c.timer_event_pending = true;
      c.timer_event_time = c.timer_deadline;
      q_.Schedule(c.timer_deadline, EventKind::kTimer, idx, gen);
      return;
    }
    c.timer_armed = false;
    const TimeoutAction a = c.sender->TimeoutFired();
    CheckBdp(c);
    switch (a) {
      case TimeoutAction::kExtendToHigh:
        ArmTimer(idx, c.sender->TimerExtension());
        break;
      case TimeoutAction::kEnterRecovery:
        ++counters_.timeouts;
        c.cc->OnLoss();
        ArmTimer(idx, c.sender->ArmTimer());
        MakeReady(idx);
        TryHost(c.tx_host);
        break;
      case TimeoutAction::kDisarm:
        break;
    }
  }

  // --- hosts ----------------------------------------------------------------

  void TryHost(uint32_t h) {
    HostState& host = hosts_[h];
    if (host.busy || host.paused) return;
    if (!host.acks.empty()) {
      const uint32_t id = host.acks.front();
      host.acks.pop_front();
      HostTransmit(h, id);
      return;
    }
    const size_t n = host.ready.size();
    for (size_t i = 0; i < n; ++i) {
      const uint32_t idx = host.ready.front();
      host.ready.pop_front();
      channels_[idx].in_ready = false;
      const int64_t id = NextPacket(idx);
      if (id >= 0) {
        MakeReady(idx);
        HostTransmit(h, static_cast<uint32_t>(id));
        return;
      }
    }
  }

  bool InjectDrop(const Packet& p) {
    if (p.type != PktType::kData) return false;
    if (!drop_rules_.empty()) {
      const auto key = std::make_tuple(p.flow, p.channel, p.psn.value());
      auto it = drop_rules_.find(key);
      if (it != drop_rules_.end()) {
        const uint32_t occurrence = sent_count_[key]++;
        if (it->second.count(occurrence)) return true;
      }
    }
    const double prob = config_.loss.data_drop_probability;
    return prob > 0 && loss_rng_.Bernoulli(prob);
  }

  void HostTransmit(uint32_t h, uint32_t id) {
    HostState& host = hosts_[h];
    const Packet& p = packets_[id];
    const LinkParams& link = topo_.link();
    const SimTime ser = SerializationTime(p.wire_bytes, link.bandwidth_bps);
    const uint32_t node = topo_.HostNode(h);
    host.busy = true;
    q_.Schedule(now() + ser, EventKind::kLinkFree, node, 0);
    if (p.type == PktType::kData) {
      ++counters_.data_packets;
    } else {
      ++counters_.ack_packets;
    }
    if (InjectDrop(p)) {
      ++counters_.injected_drops;
      ++flow_drops_[p.flow];
      FreePacket(id);
      return;
    }
    const PortPeer peer = topo_.node(node).ports[0];
    q_.Schedule(now() + ser + link.propagation, EventKind::kPacketArrival,
                peer.node, peer.port, id);
  }

  void HostReceive(uint32_t h, uint32_t id) {
    const Packet p = packets_[id];
    FreePacket(id);
    const uint32_t idx = 2 * p.flow + p.channel;
    Channel& c = channels_[idx];
    if (p.type == PktType::kData) {
      const ReceiveResult r = c.receiver->ReceiveData(p.psn, p.flags);
      if (r.ack) {
        const uint32_t aid = NewPacket();
        Packet& a = packets_[aid];
        a.type = PktType::kAck;
        a.channel = p.channel;
        a.flow = p.flow;
        a.dst_host = c.tx_host;
        a.route_key = c.ack_key;
        a.wire_bytes = config_.transport.ack_bytes;
        a.ack = *r.ack;
        hosts_[h].acks.push_back(aid);
      }
      if (r.delivered > 0) {
        c.delivered += r.delivered;
        if (c.delivered == c.packets) ChannelDelivered(c);
      }
      TryHost(h);
      return;
    }
    const AckOutcome o = c.sender->ReceiveAck(p.ack);
    CheckBdp(c);
    if (o.newly_acked > 0) c.cc->OnAck(o.newly_acked);
    if (o.entered_recovery) {
      c.cc->OnLoss();
      if (config_.transport.protocol == Protocol::kGbn &&
          config_.transport.loss_backoff > 0) {
        c.blocked_until =
            std::max(c.blocked_until, now() + config_.transport.loss_backoff);
      }
    }
    if (o.newly_acked > 0 || o.rewound) RestartTimer(idx);
    MakeReady(idx);
    TryHost(h);
  }

  // --- switches -------------------------------------------------------------

  void SendPfc(uint32_t node, uint32_t in_port, bool xoff) {
    const PortPeer peer = topo_.node(node).ports[in_port];
    if (xoff) ++counters_.pause_frames;
    q_.Schedule(now() + topo_.link().propagation, EventKind::kPfcFrame,
                peer.node, peer.port, xoff ? 1 : 0);
  }

  void OnPfc(uint32_t node, uint32_t port, bool xoff) {
    if (host_of_node_[node] >= 0) {
      const uint32_t h = static_cast<uint32_t>(host_of_node_[node]);
      hosts_[h].paused = xoff;
      if (!xoff) TryHost(h);
      return;
    }
    SwitchState& s = switches_[switch_of_node_[node]];
    s.out[port].paused = xoff;
    if (!xoff) TrySwitchOutput(node, port);
  }

  void SwitchReceive(uint32_t node, uint32_t in_port, uint32_t id) {
    SwitchState& s = switches_[switch_of_node_[node]];
    const Packet& p = packets_[id];
    const auto r = s.ingress[in_port].Enqueue(p.wire_bytes);
    if (!r.accepted) {
      ++counters_.drops;
      ++flow_drops_[p.flow];
      FreePacket(id);
      return;
    }
    if (r.signal == PfcSignal::kXoff) SendPfc(node, in_port, true);
    const uint32_t out = EcmpRoute(topo_, p.route_key, node, p.dst_host);
    s.voq[in_port][out].push_back(id);
    s.out[out].arbiter.SetBacklogged(in_port);
    TrySwitchOutput(node, out);
  }

  void TrySwitchOutput(uint32_t node, uint32_t out) {
    SwitchState& s = switches_[switch_of_node_[node]];
    OutputPort& o = s.out[out];
    if (o.busy || o.paused) return;
    const std::optional<uint32_t> in = o.arbiter.Pick();
    if (!in) return;
    auto& voq = s.voq[*in][out];
    const uint32_t id = voq.front();
    voq.pop_front();
    if (voq.empty()) o.arbiter.ClearBacklogged(*in);
    const uint32_t bytes = packets_[id].wire_bytes;
    o.busy = true;
    o.in_service_input = *in;
    o.in_service_bytes = bytes;
    const LinkParams& link = topo_.link();
    const SimTime ser = SerializationTime(bytes, link.bandwidth_bps);
    q_.Schedule(now() + ser, EventKind::kLinkFree, node, out);
    const PortPeer peer = topo_.node(node).ports[out];
    q_.Schedule(now() + ser + link.propagation, EventKind::kPacketArrival,
                peer.node, peer.port, id);
  }

  void LinkFree(uint32_t node, uint32_t port) {
    if (host_of_node_[node] >= 0) {
      const uint32_t h = static_cast<uint32_t>(host_of_node_[node]);
      hosts_[h].busy = false;
      TryHost(h);
      return;
    }
    SwitchState& s = switches_[switch_of_node_[node]];
    OutputPort& o = s.out[port];
    o.busy = false;
    // Store and forward: the buffer holds the packet until it has left.
    if (s.ingress[o.in_service_input].Dequeue(o.in_service_bytes) ==
        PfcSignal::kXon) {
      SendPfc(node, o.in_service_input, false);
    }
    TrySwitchOutput(node, port);
  }

  RunResult Collect() {
    RunResult result;
    result.params = params_;
    result.end_time = now();
    const TransportSettings& t = config_.transport;
    for (uint32_t f = 0; f < flows_.size(); ++f) {
      uint64_t retx = 0;
      for (uint32_t c = 2 * f; c < 2 * f + 2; ++c) {
        if (channels_[c].sender) retx += channels_[c].sender->retransmissions();
      }
      counters_.retransmissions += retx;
      const FlowSpec& spec = flows_[f];
      const bool finished = completion_[f] >= 0;
      if (!finished) {
        ++result.incomplete;
        if (spec.arrival > now()) continue;
      }
      FlowRecord r;
      r.id = spec.id;
      r.src = spec.src;
      r.dst = spec.dst;
      r.kind = spec.kind;
      r.size = spec.size;
      r.start = spec.arrival;
      r.completion = finished ? completion_[f] : now();
      r.path_hops = topo_.PathHops(spec.src, spec.dst);
      if (spec.kind == OpKind::kRead) {
        r.ideal_fct = IdealFct(t.read_request_bytes, r.path_hops, topo_.link(),
                               t.read_request_bytes) +
                      IdealFct(spec.size, r.path_hops, topo_.link(), t.mtu,
                               t.data_header_bytes);
      } else {
        r.ideal_fct = IdealFct(spec.size, r.path_hops, topo_.link(), t.mtu,
                               channels_[2 * f].header_bytes);
      }
      r.retransmissions = retx;
      r.drops = flow_drops_[f];
      r.incast_group = spec.incast_group;
      (finished ? result.records : result.unfinished).push_back(r);
    }
    std::sort(result.records.begin(), result.records.end(),
              [](const FlowRecord& a, const FlowRecord& b) { return a.id < b.id; });
    for (const SwitchState& s : switches_) {
      for (const IngressBuffer& b : s.ingress) {
        counters_.max_ingress_occupancy =
            std::max(counters_.max_ingress_occupancy, b.max_occupancy());
      }
    }
    counters_.events = q_.dispatched();
    result.counters = counters_;
    return result;
  }

  const RunConfig& config_;
  Topology topo_;
  ResolvedParams params_;
  std::vector<FlowSpec> flows_;
  Rng loss_rng_;
  EventQueue q_;

  std::vector<Packet> packets_;
  std::vector<uint32_t> free_packets_;
  std::vector<int> host_of_node_;
  std::vector<int> switch_of_node_;
  std::vector<HostState> hosts_;
  std::vector<SwitchState> switches_;
  std::vector<Channel> channels_;
  std::vector<SimTime> completion_;
  std::vector<uint64_t> flow_drops_;
  size_t completed_ = 0;
  RunCounters counters_;

  using RuleKey = std::tuple<uint32_t, uint8_t, uint32_t>;
  std::map<RuleKey, std::set<uint32_t>> drop_rules_;
  std::map<RuleKey, uint32_t> sent_count_;
};

}  // namespace

RunResult Run(const RunConfig& config) {
  Simulation sim(config, BuildTopology(config));
  return sim.Execute();
}

}  // namespace irn
