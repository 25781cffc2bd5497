#include "irn/verbs.h"

#include <gtest/gtest.h>

#include "support/verbs_trace.h"

namespace irn {
namespace {

RequestPacket SendPacket(uint32_t psn, uint32_t recv_sn, bool last = true,
                         uint32_t offset = 0) {
  RequestPacket p;
  p.psn = Psn(psn);
  p.kind = VerbKind::kSend;
  p.recv_wqe_sn = recv_sn;
  p.offset = offset;
  p.first = offset == 0;
  p.last = last;
  p.message_length = offset + 4;
  p.payload = {1, 2, 3, 4};
  return p;
}

RequestPacket WritePacket(uint32_t psn, uint64_t addr, bool last = true,
                          VerbKind kind = VerbKind::kWrite) {
  RequestPacket p;
  p.psn = Psn(psn);
  p.kind = kind;
  p.remote_addr = addr;
  p.last = last;
  p.recv_wqe_sn = kind == VerbKind::kWriteImm ? 1 : 0;
  p.payload = {9, 9};
  return p;
}

RequestPacket AtomicPacket(uint32_t psn, uint32_t read_sn, uint64_t addr) {
  RequestPacket p;
  p.psn = Psn(psn);
  p.kind = VerbKind::kAtomic;
  p.read_wqe_sn = read_sn;
  p.remote_addr = addr;
  p.atomic_add = 5;
  p.first = p.last = true;
  return p;
}

TEST(ResponderTest, OutOfOrderSendAllotsFromSrq) {
  SharedReceiveQueue srq;
  for (uint64_t i = 0; i < 6; ++i) srq.Post({i, 1000 * i, 100});
  Responder r(ResponderConfig{}, &srq);
  const RequestOutcome o = r.OnRequest(SendPacket(3, 4));
  EXPECT_FALSE(o.dropped);
  EXPECT_EQ(r.allotted_receive_wqes(), 4u);
  EXPECT_EQ(srq.size(), 2u);
  // Placed into the fourth dequeued buffer.
  EXPECT_EQ(r.memory().Read(3000, 4), (std::vector<uint8_t>{1, 2, 3, 4}));
  ASSERT_TRUE(o.ack);
  EXPECT_EQ(o.ack->kind, AckKind::kNack);
  EXPECT_TRUE(o.released.empty());
  EXPECT_EQ(r.pending_cqes(), 1u);
}

TEST(ResponderTest, AtomicWaitsForEarlierPackets) {
  Responder r(ResponderConfig{});
  RequestOutcome o = r.OnRequest(AtomicPacket(1, 0, 64));
  EXPECT_TRUE(o.executed.empty());
  EXPECT_EQ(r.parked_reads(), 1u);
  EXPECT_EQ(r.memory().Load64(64), 0u);
  EXPECT_FALSE(r.NextResponse());
  o = r.OnRequest(WritePacket(0, 500));
  ASSERT_EQ(o.executed.size(), 1u);
  EXPECT_EQ(o.executed[0], Psn(1));
  EXPECT_EQ(r.memory().Load64(64), 5u);
  const auto resp = r.NextResponse();
  ASSERT_TRUE(resp);
  EXPECT_EQ(resp->read_wqe_sn, 0u);
  EXPECT_EQ(resp->payload, std::vector<uint8_t>(8, 0));
}

TEST(ResponderTest, SendWithoutCreditOutOfOrderIsDropped) {
  Responder r(ResponderConfig{});
  const RequestOutcome o = r.OnRequest(SendPacket(2, 1));
  EXPECT_TRUE(o.dropped);
  EXPECT_FALSE(o.ack);
  EXPECT_FALSE(r.OnRequest(SendPacket(2, 1)).duplicate);
}

TEST(ResponderTest, SendWithoutCreditInOrderGetsRnrNack) {
  Responder r(ResponderConfig{});
  const RequestOutcome o = r.OnRequest(SendPacket(0, 1));
  ASSERT_TRUE(o.ack);
  EXPECT_EQ(o.ack->kind, AckKind::kErrorNack);
  EXPECT_EQ(o.ack->cumulative, Psn(0));
  EXPECT_EQ(r.expected_psn(), Psn(0));
  r.PostReceive({7, 0, 100});
  const RequestOutcome retry = r.OnRequest(SendPacket(0, 1));
  ASSERT_EQ(retry.released.size(), 1u);
  EXPECT_EQ(retry.released[0].receive_id, 7u);
}

TEST(ResponderTest, PrematureCqeReleasedWhenHoleFills) {
  Responder r(ResponderConfig{});
  r.PostReceive({1, 0, 100});
  RequestOutcome o = r.OnRequest(WritePacket(2, 100, true, VerbKind::kWriteImm));
  EXPECT_TRUE(o.released.empty());
  EXPECT_EQ(r.pending_cqes(), 1u);
  EXPECT_EQ(r.msn(), 0u);
  o = r.OnRequest(WritePacket(0, 0, false, VerbKind::kWriteImm));
  EXPECT_TRUE(o.released.empty());
  o = r.OnRequest(WritePacket(1, 50, false, VerbKind::kWriteImm));
  ASSERT_EQ(o.released.size(), 1u);
  EXPECT_EQ(o.released[0].kind, VerbKind::kWriteImm);
  EXPECT_EQ(r.msn(), 1u);
}

TEST(ResponderTest, SingleSendInOrderReleasesImmediately) {
  Responder r(ResponderConfig{});
  r.PostReceive({4, 0, 100});
  const RequestOutcome o = r.OnRequest(SendPacket(0, 1));
  ASSERT_EQ(o.released.size(), 1u);
  EXPECT_EQ(o.released[0].receive_id, 4u);
  EXPECT_EQ(o.ack->kind, AckKind::kAck);
  EXPECT_EQ(o.ack->msn, 1u);
}

TEST(ResponderTest, TwoMessagesInOneAdvanceReleaseInPostingOrder) {
  Responder r(ResponderConfig{});
  r.PostReceive({10, 0, 100});
  r.PostReceive({11, 200, 100});
  r.OnRequest(SendPacket(2, 2));
  r.OnRequest(SendPacket(1, 1));
  const RequestOutcome o = r.OnRequest(WritePacket(0, 900));
  ASSERT_EQ(o.released.size(), 2u);
  EXPECT_EQ(o.released[0].receive_id, 10u);
  EXPECT_EQ(o.released[1].receive_id, 11u);
  EXPECT_EQ(r.msn(), 3u);
}

TEST(ResponderTest, WriteVisibilityConditions) {
  Responder r(ResponderConfig{});
  r.PostReceive({1, 0, 100});
  // Write 0..1, WriteImm at 3 completes while 2 (Write) is missing.
  r.OnRequest(WritePacket(0, 0, false));
  r.OnRequest(WritePacket(1, 2));
  r.OnRequest(WritePacket(3, 10, true, VerbKind::kWriteImm));
  EXPECT_FALSE(r.WriteVisible(Psn(1)));
  r.OnRequest(WritePacket(2, 20));
  EXPECT_TRUE(r.WriteVisible(Psn(1)));
  EXPECT_TRUE(r.WriteVisible(Psn(2)));

  Responder a(ResponderConfig{});
  a.OnRequest(WritePacket(0, 0));
  EXPECT_FALSE(a.WriteVisible(Psn(0)));
  a.OnRequest(AtomicPacket(1, 0, 64));
  EXPECT_TRUE(a.WriteVisible(Psn(0)));
  EXPECT_FALSE(a.WriteVisible(Psn(2)));
}

TEST(ResponderTest, ReadBufferOverflowIsAViolation) {
  ResponderConfig cfg;
  cfg.read_buffer_depth = 2;
  Responder r(cfg);
  r.OnRequest(AtomicPacket(1, 0, 0));
  EXPECT_THROW(r.OnRequest(AtomicPacket(3, 2, 8)), ProtocolViolation);
}

TEST(ResponderTest, RetransmittedReadIsNotRerun) {
  Responder r(ResponderConfig{});
  EXPECT_EQ(r.OnRequest(AtomicPacket(0, 0, 8)).executed.size(), 1u);
  const RequestOutcome again = r.OnRequest(AtomicPacket(0, 0, 8));
  EXPECT_TRUE(again.duplicate);
  EXPECT_TRUE(again.executed.empty());
  EXPECT_EQ(r.memory().Load64(8), 5u);
}

TEST(RequesterTest, ReadResponsesAreAckedPerPacket) {
  Requester q(RequesterConfig{});
  WorkRequest rd;
  rd.id = 1;
  rd.kind = VerbKind::kRead;
  rd.local_addr = 100;
  rd.read_length = 2500;
  ASSERT_TRUE(q.Post(rd));
  const auto req = q.NextRequest();
  ASSERT_TRUE(req);
  EXPECT_EQ(req->read_length, 2500u);
  ResponsePacket p0{Psn(0), 0, 0, false, std::vector<uint8_t>(1000, 1)};
  ResponsePacket p1{Psn(1), 0, 1000, false, std::vector<uint8_t>(1000, 2)};
  ResponsePacket p2{Psn(2), 0, 2000, true, std::vector<uint8_t>(500, 3)};
  ResponseOutcome o = q.OnResponse(p0);
  EXPECT_EQ(o.read_ack->kind, AckKind::kAck);
  o = q.OnResponse(p2);
  EXPECT_EQ(o.read_ack->kind, AckKind::kNack);
  EXPECT_EQ(o.read_ack->cumulative, Psn(1));
  EXPECT_EQ(o.read_ack->sacked, Psn(2));
  EXPECT_TRUE(q.TakeCompletions().empty());
  o = q.OnResponse(p1);
  EXPECT_EQ(o.read_ack->cumulative, Psn(3));
  const auto done = q.TakeCompletions();
  ASSERT_EQ(done.size(), 1u);
  EXPECT_EQ(done[0].wr_id, 1u);
  EXPECT_EQ(q.local_memory().Read(2099, 2), (std::vector<uint8_t>{2, 3}));
}

TEST(RequesterTest, WriteDataPacketHasNoReadAckPath) {
  Requester q(RequesterConfig{});
  WorkRequest w;
  w.kind = VerbKind::kWrite;
  w.data.assign(10, 1);
  q.Post(w);
  const auto p = q.NextRequest();
  ASSERT_TRUE(p);
  EXPECT_EQ(q.rpsn_expected(), Psn(0));
  EXPECT_THROW(q.OnResponse({Psn(0), 0, 0, true, {1}}), ProtocolViolation);
}

TEST(RequesterTest, RequestAndResponseSpacesAreSeparate) {
  Requester q(RequesterConfig{}, Psn(500), Psn(9000));
  WorkRequest w;
  w.kind = VerbKind::kWrite;
  w.data.assign(2000, 1);
  q.Post(w);
  WorkRequest rd;
  rd.kind = VerbKind::kRead;
  rd.read_length = 100;
  rd.id = 2;
  q.Post(rd);
  std::vector<uint32_t> psns;
  while (auto p = q.NextRequest()) psns.push_back(p->psn.value());
  EXPECT_EQ(psns, (std::vector<uint32_t>{500, 501, 502}));
  q.OnResponse({Psn(9000), 0, 0, true, std::vector<uint8_t>(100, 4)});
  EXPECT_EQ(q.rpsn_expected(), Psn(9001));
  EXPECT_EQ(q.transport().snd_una(), Psn(500));
}

TEST(RequesterTest, RnrNackRewindsEverythingInFlight) {
  Requester q(RequesterConfig{}, Psn(10));
  WorkRequest w;
  w.kind = VerbKind::kWrite;
  w.data.assign(5000, 1);
  q.Post(w);
  for (int i = 0; i < 5; ++i) ASSERT_TRUE(q.NextRequest());
  EXPECT_FALSE(q.NextRequest());
  const AckOutcome o = q.OnAck({AckKind::kErrorNack, Psn(10), Psn(), 0});
  EXPECT_TRUE(o.rewound);
  std::vector<uint32_t> resent;
  while (auto p = q.NextRequest()) resent.push_back(p->psn.value());
  EXPECT_EQ(resent, (std::vector<uint32_t>{10, 11, 12, 13, 14}));
}

TEST(RequesterTest, SequenceNackUsesSelectiveRecovery) {
  Requester q(RequesterConfig{}, Psn(10));
  WorkRequest w;
  w.kind = VerbKind::kWrite;
  w.data.assign(5000, 1);
  q.Post(w);
  for (int i = 0; i < 5; ++i) ASSERT_TRUE(q.NextRequest());
  const AckOutcome o = q.OnAck({AckKind::kNack, Psn(10), Psn(12), 0});
  EXPECT_FALSE(o.rewound);
  std::vector<uint32_t> resent;
  while (auto p = q.NextRequest()) resent.push_back(p->psn.value());
  EXPECT_EQ(resent, (std::vector<uint32_t>{10, 11}));
}

TEST(RequesterTest, ErrorNackWithNothingInFlightIsNoop) {
  Requester q(RequesterConfig{});
  q.OnAck({AckKind::kErrorNack, Psn(0), Psn(), 0});
  EXPECT_FALSE(q.NextRequest());
}

TEST(RequesterTest, ReadLimitBackPressuresPosting) {
  RequesterConfig cfg;
  cfg.max_outstanding_reads = 2;
  Requester q(cfg);
  WorkRequest rd;
  rd.kind = VerbKind::kRead;
  rd.read_length = 10;
  EXPECT_TRUE(q.Post(rd));
  EXPECT_TRUE(q.Post(rd));
  EXPECT_FALSE(q.Post(rd));
  q.OnResponse({Psn(0), 0, 0, true, std::vector<uint8_t>(10, 0)});
  EXPECT_TRUE(q.Post(rd));
}

TEST(RequesterTest, FencedSendWaitsForPriorCompletion) {
  Requester q(RequesterConfig{});
  WorkRequest w;
  w.id = 1;
  w.kind = VerbKind::kWrite;
  w.data.assign(10, 1);
  WorkRequest s;
  s.id = 2;
  s.kind = VerbKind::kSendInvalidate;
  s.data.assign(10, 2);
  q.Post(w);
  q.Post(s);
  ASSERT_TRUE(q.NextRequest());
  EXPECT_FALSE(q.NextRequest());
  q.OnAck({AckKind::kAck, Psn(1), Psn(), 1});
  const auto p = q.NextRequest();
  ASSERT_TRUE(p);
  EXPECT_EQ(p->kind, VerbKind::kSendInvalidate);
}

TEST(FenceRulesTest, Examples) {
  WorkRequest a;
  a.kind = VerbKind::kWrite;
  a.remote_addr = 0;
  a.data.assign(100, 0);
  WorkRequest s;
  s.kind = VerbKind::kSendInvalidate;
  auto out = ApplyFenceRules({a, s}, false);
  EXPECT_FALSE(out[0].fence);
  EXPECT_TRUE(out[1].fence);

  WorkRequest b = a;
  b.remote_addr = 100;
  out = ApplyFenceRules({a, b}, true);
  EXPECT_FALSE(out[1].fence);
  out = ApplyFenceRules({a, a}, true);
  EXPECT_TRUE(out[1].fence);
  out = ApplyFenceRules({a, a}, false);
  EXPECT_FALSE(out[1].fence);
}

TEST(HeaderOverheadTest, PerKind) {
  RequestPacket p;
  p.kind = VerbKind::kWrite;
  EXPECT_EQ(p.HeaderOverhead(), 16u);
  p.kind = VerbKind::kSend;
  EXPECT_EQ(p.HeaderOverhead(), 6u);
  p.kind = VerbKind::kRead;
  EXPECT_EQ(p.HeaderOverhead(), 0u);
}

TEST(StateOverheadTest, Accounting) {
  const StateOverhead s = StateOverheadReport(128);
  EXPECT_EQ(s.sender_bits, 52u);
  EXPECT_EQ(s.responder_bits, 52u);
  EXPECT_EQ(s.read_tracking_bits, 56u);
  EXPECT_EQ(s.per_qp_bits, 160u);
  EXPECT_EQ(s.bitmap_bits, 640u);
  EXPECT_EQ(s.per_wqe_bytes, 3u);
  EXPECT_EQ(s.shared_bytes, 10u);
  EXPECT_EQ(StateOverheadReport(110).bitmap_bits, 550u);
  EXPECT_EQ(StateOverheadReport(7).per_qp_bits, 160u);
  EXPECT_THROW(StateOverheadReport(0), std::invalid_argument);
}

TEST(VerbsPropertyTest, OutOfOrderMatchesInOrderReplay) {
  for (uint64_t seed = 0; seed < 300; ++seed) {
    const std::string mismatch = testing::RunVerbsTrial(seed);
    ASSERT_TRUE(mismatch.empty()) << mismatch;
  }
}

TEST(VerbsPropertyTest, CqeReleaseFollowsPostingOrder) {
  for (uint64_t seed = 0; seed < 100; ++seed) {
    const auto t = testing::MakeVerbsTrace(seed);
    const auto o = testing::RunVerbsTrace(t, seed, true);
    for (size_t i = 1; i < o.responder_cqes.size(); ++i) {
      ASSERT_LT(o.responder_cqes[i - 1].recv_wqe_sn,
                o.responder_cqes[i].recv_wqe_sn);
    }
    uint32_t expected = 0;
    for (const auto& wr : t.requests) expected += ConsumesReceiveWqe(wr.kind);
    EXPECT_EQ(o.responder_cqes.size(), expected);
  }
}

}  // namespace
}  // namespace irn
