#include "irn/verbs.h"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace irn {

std::string_view VerbKindName(VerbKind kind) {
  switch (kind) {
    case VerbKind::kWrite: return "write";
    case VerbKind::kWriteImm: return "write_imm";
    case VerbKind::kRead: return "read";
    case VerbKind::kSend: return "send";
    case VerbKind::kSendInvalidate: return "send_invalidate";
    case VerbKind::kAtomic: return "atomic";
  }
  return "unknown";
}

bool ConsumesReceiveWqe(VerbKind kind) {
  return kind == VerbKind::kSend || kind == VerbKind::kSendInvalidate ||
         kind == VerbKind::kWriteImm;
}

bool IsReadLike(VerbKind kind) {
  return kind == VerbKind::kRead || kind == VerbKind::kAtomic;
}

namespace {

bool IsWriteLike(VerbKind kind) {
  return kind == VerbKind::kWrite || kind == VerbKind::kWriteImm;
}

uint32_t PacketCount(uint64_t bytes, uint32_t mtu) {
  return std::max<uint32_t>(1, static_cast<uint32_t>((bytes + mtu - 1) / mtu));
}

}  // namespace

void RemoteMemory::Write(uint64_t addr, std::span<const uint8_t> bytes) {
  for (size_t i = 0; i < bytes.size(); ++i) bytes_[addr + i] = bytes[i];
}

std::vector<uint8_t> RemoteMemory::Read(uint64_t addr, uint32_t length) const {
  std::vector<uint8_t> out(length, 0);
  for (auto it = bytes_.lower_bound(addr);
       it != bytes_.end() && it->first < addr + length; ++it) {
    out[it->first - addr] = it->second;
  }
  return out;
}

uint64_t RemoteMemory::Load64(uint64_t addr) const {
  const std::vector<uint8_t> b = Read(addr, 8);
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

void RemoteMemory::Store64(uint64_t addr, uint64_t value) {
  for (int i = 0; i < 8; ++i) bytes_[addr + i] = (value >> (8 * i)) & 0xff;
}

uint32_t RequestPacket::HeaderOverhead() const {
  if (IsWriteLike(kind)) return 16;  // RETH on every packet
  if (kind == VerbKind::kSend || kind == VerbKind::kSendInvalidate) {
    return 6;  // recv_wqe_sn and offset
  }
  return 0;
}

std::optional<ReceiveWqe> SharedReceiveQueue::Pop() {
  if (queue_.empty()) return std::nullopt;
  ReceiveWqe w = queue_.front();
  queue_.pop_front();
  return w;
}

// --- responder ---------------------------------------------------------------

Responder::Responder(const ResponderConfig& config, SharedReceiveQueue* srq,
                     Psn initial_psn)
    : config_(config),
      srq_(srq),
      receiver_(config.bitmap_capacity, initial_psn),
      read_buffer_(config.read_buffer_depth),
      response_sender_(config.response_transport, 0) {
  if (config.read_buffer_depth == 0 || config.mtu == 0) {
    throw std::invalid_argument("read buffer depth and mtu must be positive");
  }
}

void Responder::PostReceive(const ReceiveWqe& wqe) { own_queue_.push_back(wqe); }

size_t Responder::parked_reads() const {
  return std::count_if(read_buffer_.begin(), read_buffer_.end(),
                       [](const auto& s) { return s.has_value(); });
}

const ReceiveWqe* Responder::Lookup(uint32_t recv_wqe_sn) {
  if (recv_wqe_sn == 0) throw ProtocolViolation("recv_wqe_sn starts at 1");
  // A later Send may arrive first; allot every WQE up to its number.
  while (next_recv_sn_ <= recv_wqe_sn) {
    std::optional<ReceiveWqe> w;
    if (srq_ != nullptr) {
      w = srq_->Pop();
    } else if (!own_queue_.empty()) {
      w = own_queue_.front();
      own_queue_.pop_front();
    }
    if (!w) return nullptr;
    allotted_[next_recv_sn_++] = *w;
  }
  auto it = allotted_.find(recv_wqe_sn);
  if (it == allotted_.end()) {
    throw ProtocolViolation("Receive WQE " + std::to_string(recv_wqe_sn) +
                            " already consumed");
  }
  return &it->second;
}

RequestOutcome Responder::OnRequest(const RequestPacket& p) {
  RequestOutcome out;
  const Psn expected = receiver_.expected_psn();
  const SeqBitmap& bm = receiver_.bitmap();
  if (p.psn < expected || (bm.InWindow(p.psn) && bm.IsSet(p.psn))) {
    const ReceiveResult r = receiver_.ReceiveData(p.psn);
    out.duplicate = true;
    out.ack = r.ack;
    return out;
  }
  if (!bm.InWindow(p.psn)) {
    throw ProtocolViolation("request psn " + std::to_string(p.psn.value()) +
                            " beyond the receive window");
  }

  const ReceiveWqe* wqe = nullptr;
  if (ConsumesReceiveWqe(p.kind)) {
    wqe = Lookup(p.recv_wqe_sn);
    if (wqe == nullptr) {
      if (p.psn == expected) {
        out.ack = AckPacket{AckKind::kErrorNack, expected, Psn(), msn()};
      } else {
        out.dropped = true;
      }
      return out;
    }
  }

  switch (p.kind) {
    case VerbKind::kWrite:
    case VerbKind::kWriteImm:
      memory_.Write(p.remote_addr, p.payload);
      break;
    case VerbKind::kSend:
    case VerbKind::kSendInvalidate:
      if (uint64_t{p.offset} + p.payload.size() > wqe->length) {
        throw ProtocolViolation("Send overruns its Receive WQE");
      }
      memory_.Write(wqe->addr + p.offset, p.payload);
      break;
    case VerbKind::kRead:
    case VerbKind::kAtomic: {
      auto& slot = read_buffer_[p.read_wqe_sn % config_.read_buffer_depth];
      if (slot && slot->read_wqe_sn != p.read_wqe_sn) {
        throw ProtocolViolation("Read WQE buffer overflow");
      }
      slot = p;
      break;
    }
  }

  SeqFlags flags;
  flags.msn_update = p.last;
  flags.wqe_expire = p.last && ConsumesReceiveWqe(p.kind);
  if (flags.wqe_expire) {
    premature_[p.recv_wqe_sn] = {
        ResponderCqe{wqe->id, p.recv_wqe_sn, p.kind, p.message_length, p.imm},
        p.psn};
  }
  const ReceiveResult r = receiver_.ReceiveData(p.psn, flags);
  out.ack = r.ack;
  if (r.delivered == 0) return out;

  const Psn head = receiver_.expected_psn();
  for (uint32_t i = 0; i < r.consumed_flags[SeqBitmap::kExpirePlane]; ++i) {
    auto it = premature_.begin();
    out.released.push_back(it->second.first);
    RaiseVisibility(it->second.second + 1);
    allotted_.erase(it->first);
    premature_.erase(it);
  }
  while (true) {
    auto& slot = read_buffer_[next_read_sn_ % config_.read_buffer_depth];
    if (!slot || slot->read_wqe_sn != next_read_sn_ || !(slot->psn < head)) {
      break;
    }
    const RequestPacket request = *slot;
    slot.reset();
    ++next_read_sn_;
    Execute(request, out);
  }
  return out;
}

void Responder::Execute(const RequestPacket& request, RequestOutcome& out) {
  out.executed.push_back(request.psn);
  if (request.kind == VerbKind::kAtomic) {
    const uint64_t old = memory_.Load64(request.remote_addr);
    memory_.Store64(request.remote_addr, old + request.atomic_add);
    ResponsePacket resp{next_rpsn_, request.read_wqe_sn, 0, true, {}};
    for (int i = 0; i < 8; ++i) resp.payload.push_back((old >> (8 * i)) & 0xff);
    responses_[next_rpsn_.value()] = std::move(resp);
    next_rpsn_ += 1;
    response_sender_.AddPackets(1);
    RaiseVisibility(request.psn + 1);
    return;
  }
  const std::vector<uint8_t> data =
      memory_.Read(request.remote_addr, request.read_length);
  const uint32_t n = PacketCount(data.size(), config_.mtu);
  for (uint32_t i = 0; i < n; ++i) {
    const size_t begin = size_t{i} * config_.mtu;
    const size_t end = std::min(data.size(), begin + config_.mtu);
    ResponsePacket resp{next_rpsn_, request.read_wqe_sn,
                        static_cast<uint32_t>(begin), i + 1 == n,
                        std::vector<uint8_t>(data.begin() + begin,
                                             data.begin() + end)};
    responses_[next_rpsn_.value()] = std::move(resp);
    next_rpsn_ += 1;
  }
  response_sender_.AddPackets(n);
}

std::optional<ResponsePacket> Responder::NextResponse() {
  const std::optional<TxDecision> d = response_sender_.TxFree(true);
  if (!d) return std::nullopt;
  return responses_.at(d->psn.value());
}

AckOutcome Responder::OnReadAck(const AckPacket& ack) {
  const AckOutcome o = response_sender_.ReceiveAck(ack);
  const Psn una = response_sender_.snd_una();
  std::erase_if(responses_, [una](const auto& kv) { return Psn(kv.first) < una; });
  return o;
}

void Responder::RaiseVisibility(Psn below) {
  if (!visible_below_ || *visible_below_ < below) visible_below_ = below;
}

bool Responder::WriteVisible(Psn write_last_psn) const {
  return visible_below_ && write_last_psn < *visible_below_;
}

// --- requester ---------------------------------------------------------------

Requester::Requester(const RequesterConfig& config, Psn initial_spsn,
                     Psn initial_rpsn)
    : config_(config),
      sender_(config.transport, 0, initial_spsn),
      response_receiver_(config.response_bitmap, initial_rpsn),
      next_spsn_(initial_spsn),
      next_response_(initial_rpsn) {
  if (config.mtu == 0 || config.max_outstanding_reads == 0) {
    throw std::invalid_argument("mtu and read limit must be positive");
  }
}

bool Requester::Post(WorkRequest wr) {
  if (IsReadLike(wr.kind)) {
    if (outstanding_reads_ >= config_.max_outstanding_reads) return false;
    ++outstanding_reads_;
  }
  if (wr.kind == VerbKind::kAtomic) wr.read_length = 8;
  if (wr.kind == VerbKind::kSendInvalidate) wr.fence = true;
  if (config_.overlap_fence && IsWriteLike(wr.kind)) {
    const uint64_t lo = wr.remote_addr, hi = lo + wr.data.size();
    auto overlaps = [&](const WorkRequest& o) {
      return IsWriteLike(o.kind) && o.remote_addr < hi &&
             lo < o.remote_addr + o.data.size();
    };
    for (const Outstanding& o : inflight_) wr.fence |= overlaps(o.wr);
    for (const WorkRequest& q : queue_) wr.fence |= overlaps(q);
  }
  queue_.push_back(std::move(wr));
  Dispatch();
  return true;
}

void Requester::Dispatch() {
  while (!queue_.empty()) {
    WorkRequest& wr = queue_.front();
    if (wr.fence && !inflight_.empty()) return;
    const bool read_like = IsReadLike(wr.kind);
    const uint32_t n = read_like ? 1 : PacketCount(wr.data.size(), config_.mtu);
    const uint32_t recv_sn = ConsumesReceiveWqe(wr.kind) ? next_recv_sn_++ : 0;
    const uint32_t read_sn = read_like ? next_read_sn_++ : 0;
    for (uint32_t i = 0; i < n; ++i) {
      RequestPacket pk;
      pk.psn = next_spsn_;
      pk.kind = wr.kind;
      pk.wr_id = wr.id;
      pk.first = i == 0;
      pk.last = i + 1 == n;
      pk.imm = wr.imm;
      pk.recv_wqe_sn = recv_sn;
      pk.read_wqe_sn = read_sn;
      if (read_like) {
        pk.message_length = wr.read_length;
        pk.read_length = wr.read_length;
        pk.remote_addr = wr.remote_addr;
        pk.atomic_add = wr.atomic_add;
      } else {
        const size_t begin = size_t{i} * config_.mtu;
        const size_t end = std::min(wr.data.size(), begin + config_.mtu);
        pk.message_length = static_cast<uint32_t>(wr.data.size());
        pk.offset = static_cast<uint32_t>(begin);
        if (IsWriteLike(wr.kind)) pk.remote_addr = wr.remote_addr + begin;
        pk.payload.assign(wr.data.begin() + begin, wr.data.begin() + end);
      }
      packets_[next_spsn_.value()] = std::move(pk);
      next_spsn_ += 1;
    }
    sender_.AddPackets(n);
    Outstanding o{std::move(wr), next_spsn_ - 1, next_response_};
    if (read_like) {
      const uint32_t responses =
          o.wr.kind == VerbKind::kAtomic
              ? 1
              : PacketCount(o.wr.read_length, config_.mtu);
      next_response_ += responses;
      o.response_end = next_response_;
      read_dest_[read_sn] = o.wr.local_addr;
    }
    inflight_.push_back(std::move(o));
    queue_.pop_front();
  }
}

std::optional<RequestPacket> Requester::NextRequest() {
  const std::optional<TxDecision> d = sender_.TxFree(true);
  if (!d) return std::nullopt;
  return packets_.at(d->psn.value());
}

void Requester::Retire() {
  const Psn una = sender_.snd_una();
  const Psn responses = response_receiver_.expected_psn();
  while (!inflight_.empty()) {
    const Outstanding& o = inflight_.front();
    const bool done = IsReadLike(o.wr.kind) ? !(responses < o.response_end)
                                            : o.last_psn < una;
    if (!done) break;
    completions_.push_back({o.wr.id, o.wr.kind});
    if (IsReadLike(o.wr.kind)) --outstanding_reads_;
    inflight_.pop_front();
  }
}

AckOutcome Requester::OnAck(const AckPacket& ack) {
  const AckOutcome o = sender_.ReceiveAck(ack);
  const Psn una = sender_.snd_una();
  std::erase_if(packets_, [una](const auto& kv) { return Psn(kv.first) < una; });
  Retire();
  Dispatch();
  return o;
}

ResponseOutcome Requester::OnResponse(const ResponsePacket& packet) {
  ResponseOutcome out;
  SeqFlags flags;
  flags.msn_update = packet.last;
  const ReceiveResult r = response_receiver_.ReceiveData(packet.rpsn, flags);
  out.read_ack = r.ack;
  out.duplicate = r.duplicate;
  if (!r.duplicate) {
    auto it = read_dest_.find(packet.read_wqe_sn);
    if (it == read_dest_.end()) {
      throw ProtocolViolation("response for unknown read_wqe_sn");
    }
    local_.Write(it->second + packet.offset, packet.payload);
  }
  if (r.delivered > 0) {
    Retire();
    Dispatch();
  }
  return out;
}

std::vector<RequesterCqe> Requester::TakeCompletions() {
  std::vector<RequesterCqe> out;
  out.swap(completions_);
  return out;
}

std::vector<WorkRequest> ApplyFenceRules(std::vector<WorkRequest> queue,
                                         bool overlap_fence) {
  for (size_t i = 0; i < queue.size(); ++i) {
    WorkRequest& wr = queue[i];
    if (wr.kind == VerbKind::kSendInvalidate) wr.fence = true;
    if (!overlap_fence || !IsWriteLike(wr.kind)) continue;
    const uint64_t lo = wr.remote_addr, hi = lo + wr.data.size();
    for (size_t j = 0; j < i; ++j) {
      const WorkRequest& o = queue[j];
      if (IsWriteLike(o.kind) && o.remote_addr < hi &&
          lo < o.remote_addr + o.data.size()) {
        wr.fence = true;
        break;
      }
    }
  }
  return queue;
}

StateOverhead StateOverheadReport(uint32_t bitmap_width) {
  if (bitmap_width == 0) throw std::invalid_argument("bitmap width is zero");
  StateOverhead s;
  s.sender_bits = 24 + 24 + 4;  // retransmit psn, recovery psn, flags
  s.responder_bits = 24 + 24 + 4;
  s.read_tracking_bits = 56;  // Read timer plus Read WQE buffer progress
  s.per_qp_bits = s.sender_bits + s.responder_bits + s.read_tracking_bits;
  // 2-bitmap and SACK bitmap at the responder; SACK and Read response
  // bitmaps at the requester.
  s.bitmap_bits = 5 * bitmap_width;
  s.per_wqe_bytes = 3;
  s.shared_bytes = 10;  // BDP cap, RTO_low and N
  return s;
}

}  // namespace irn
