#ifndef IRN_VERBS_H_
#define IRN_VERBS_H_

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "irn/irn_transport.h"
#include "irn/psn.h"
#include "irn/transport.h"

namespace irn {

enum class VerbKind : uint8_t {
  kWrite,
  kWriteImm,
  kRead,
  kSend,
  kSendInvalidate,
  kAtomic,  // fetch-and-add on 8 bytes
};

std::string_view VerbKindName(VerbKind kind);
bool ConsumesReceiveWqe(VerbKind kind);
bool IsReadLike(VerbKind kind);

// Sparse byte-addressed memory; unwritten bytes read as zero.
class RemoteMemory {
 public:
  void Write(uint64_t addr, std::span<const uint8_t> bytes);
  std::vector<uint8_t> Read(uint64_t addr, uint32_t length) const;
  uint64_t Load64(uint64_t addr) const;
  void Store64(uint64_t addr, uint64_t value);
  const std::map<uint64_t, uint8_t>& bytes() const { return bytes_; }
  friend bool operator==(const RemoteMemory&, const RemoteMemory&) = default;

 private:
  std::map<uint64_t, uint8_t> bytes_;
};

struct WorkRequest {
  uint64_t id = 0;
  VerbKind kind = VerbKind::kWrite;
  uint64_t remote_addr = 0;  // Write, Read and Atomic target
  uint64_t local_addr = 0;   // where Read/Atomic results land at the requester
  uint32_t read_length = 0;
  std::vector<uint8_t> data;  // Write/Send payload
  uint64_t atomic_add = 0;
  uint32_t imm = 0;
  bool fence = false;
};

// Per-packet headers carry enough to place the payload without any
// earlier packet of the same message.
struct RequestPacket {
  Psn psn;
  VerbKind kind = VerbKind::kWrite;
  uint64_t wr_id = 0;
  bool first = false;
  bool last = false;
  uint32_t message_length = 0;
  uint64_t remote_addr = 0;  // RETH, on every Write packet
  uint32_t recv_wqe_sn = 0;  // Send and WriteImm; first Receive WQE is 1
  uint32_t offset = 0;       // Send: byte offset into the receive buffer
  uint32_t read_wqe_sn = 0;  // Read and Atomic; first is 0
  uint32_t read_length = 0;
  uint64_t atomic_add = 0;
  uint32_t imm = 0;
  std::vector<uint8_t> payload;

  // Extra wire bytes over a stock RoCE packet.
  uint32_t HeaderOverhead() const;
};

struct ResponsePacket {
  Psn rpsn;
  uint32_t read_wqe_sn = 0;
  uint32_t offset = 0;
  bool last = false;
  std::vector<uint8_t> payload;
};

struct ReceiveWqe {
  uint64_t id = 0;
  uint64_t addr = 0;
  uint32_t length = 0;
};

class SharedReceiveQueue {
 public:
  void Post(const ReceiveWqe& wqe) { queue_.push_back(wqe); }
  std::optional<ReceiveWqe> Pop();
  size_t size() const { return queue_.size(); }

 private:
  std::deque<ReceiveWqe> queue_;
};

struct ResponderCqe {
  uint64_t receive_id = 0;
  uint32_t recv_wqe_sn = 0;
  VerbKind kind = VerbKind::kSend;
  uint32_t byte_len = 0;
  uint32_t imm = 0;
  friend bool operator==(const ResponderCqe&, const ResponderCqe&) = default;
};

struct ResponderConfig {
  uint32_t bitmap_capacity = 128;
  uint32_t read_buffer_depth = 16;
  uint32_t mtu = 1000;
  IrnSenderConfig response_transport;
};

struct RequestOutcome {
  std::optional<AckPacket> ack;  // kErrorNack is an RNR NACK
  std::vector<ResponderCqe> released;
  std::vector<Psn> executed;  // Read/Atomic requests run by this packet
  bool duplicate = false;
  bool dropped = false;  // out-of-order with no Receive WQE: silent
};

class Responder {
 public:
  explicit Responder(const ResponderConfig& config,
                     SharedReceiveQueue* srq = nullptr,
                     Psn initial_psn = Psn(0));

  // Posts to this QP's own receive queue; ignored work when an SRQ is set.
  void PostReceive(const ReceiveWqe& wqe);

  RequestOutcome OnRequest(const RequestPacket& packet);

  // Read responses travel in their own sequence space with IRN recovery.
  std::optional<ResponsePacket> NextResponse();
  AckOutcome OnReadAck(const AckPacket& ack);
  TransportSender& response_transport() { return response_sender_; }

  // A Write is visible once a later WriteImm or Send completed or a later
  // Atomic executed; every one of those waits for all earlier packets.
  bool WriteVisible(Psn write_last_psn) const;

  const RemoteMemory& memory() const { return memory_; }
  RemoteMemory& memory() { return memory_; }
  uint32_t msn() const { return receiver_.msn(); }
  Psn expected_psn() const { return receiver_.expected_psn(); }
  uint32_t allotted_receive_wqes() const { return next_recv_sn_ - 1; }
  size_t pending_cqes() const { return premature_.size(); }
  size_t parked_reads() const;

 private:
  const ReceiveWqe* Lookup(uint32_t recv_wqe_sn);
  void Execute(const RequestPacket& request, RequestOutcome& out);
  void RaiseVisibility(Psn below);

  ResponderConfig config_;
  SharedReceiveQueue* srq_;
  IrnReceiver receiver_;
  RemoteMemory memory_;
  std::deque<ReceiveWqe> own_queue_;
  std::map<uint32_t, ReceiveWqe> allotted_;
  uint32_t next_recv_sn_ = 1;
  // Premature CQEs by recv_wqe_sn, with the psn of the completing packet.
  std::map<uint32_t, std::pair<ResponderCqe, Psn>> premature_;
  std::vector<std::optional<RequestPacket>> read_buffer_;
  uint32_t next_read_sn_ = 0;
  std::optional<Psn> visible_below_;
  IrnSender response_sender_;
  std::map<uint32_t, ResponsePacket> responses_;  // by rpsn value
  Psn next_rpsn_;
};

struct RequesterCqe {
  uint64_t wr_id = 0;
  VerbKind kind = VerbKind::kWrite;
  friend bool operator==(const RequesterCqe&, const RequesterCqe&) = default;
};

struct RequesterConfig {
  uint32_t mtu = 1000;
  uint32_t max_outstanding_reads = 16;  // equals the responder's buffer depth
  bool overlap_fence = false;
  IrnSenderConfig transport;
  uint32_t response_bitmap = 128;
};

struct ResponseOutcome {
  std::optional<AckPacket> read_ack;  // read ACK or read NACK
  bool duplicate = false;
};

class Requester {
 public:
  explicit Requester(const RequesterConfig& config, Psn initial_spsn = Psn(0),
                     Psn initial_rpsn = Psn(0));

  // Returns false, leaving the request unposted, when the outstanding Read
  // limit is reached.
  bool Post(WorkRequest wr);

  std::optional<RequestPacket> NextRequest();
  AckOutcome OnAck(const AckPacket& ack);
  ResponseOutcome OnResponse(const ResponsePacket& packet);
  TransportSender& transport() { return sender_; }

  // Completions in posting order.
  std::vector<RequesterCqe> TakeCompletions();
  bool Idle() const { return queue_.empty() && inflight_.empty(); }
  const RemoteMemory& local_memory() const { return local_; }
  Psn rpsn_expected() const { return response_receiver_.expected_psn(); }

 private:
  struct Outstanding {
    WorkRequest wr;
    Psn last_psn;
    Psn response_end;  // Read/Atomic: one past the last response rpsn
    bool done = false;
  };
  void Dispatch();
  void Retire();

  RequesterConfig config_;
  IrnSender sender_;
  IrnReceiver response_receiver_;
  RemoteMemory local_;
  std::deque<WorkRequest> queue_;  // posted, not yet packetized
  std::deque<Outstanding> inflight_;
  std::map<uint32_t, RequestPacket> packets_;  // by psn value, until acked
  std::map<uint32_t, uint64_t> read_dest_;     // read_wqe_sn -> local_addr
  std::vector<RequesterCqe> completions_;
  Psn next_spsn_;
  Psn next_response_;
  uint32_t next_recv_sn_ = 1;
  uint32_t next_read_sn_ = 0;
  uint32_t outstanding_reads_ = 0;
};

// Marks each request that must wait for all earlier ones: Send with
// Invalidate always, and with overlap_fence a Write overlapping an earlier
// Write's range.
std::vector<WorkRequest> ApplyFenceRules(std::vector<WorkRequest> queue,
                                         bool overlap_fence);

struct StateOverhead {
  uint32_t sender_bits = 0;
  uint32_t responder_bits = 0;
  uint32_t read_tracking_bits = 0;
  uint32_t per_qp_bits = 0;
  uint32_t bitmap_bits = 0;
  uint32_t per_wqe_bytes = 0;
  uint32_t shared_bytes = 0;
};

// Throws std::invalid_argument for a zero width.
StateOverhead StateOverheadReport(uint32_t bitmap_width);

}  // namespace irn

#endif  // IRN_VERBS_H_
