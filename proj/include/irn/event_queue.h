#ifndef IRN_EVENT_QUEUE_H_
#define IRN_EVENT_QUEUE_H_

#include <cstdint>
#include <queue>
#include <stdexcept>
#include <vector>

#include "irn/units.h"

namespace irn {

class CausalityError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class EventKind : uint8_t {
  kPacketArrival,
  kLinkFree,
  kPfcFrame,
  kTimer,
  kFlowArrival,
  kHostWake,
  kUser,
};

struct Event {
  SimTime time = 0;
  uint64_t sequence = 0;
  EventKind kind = EventKind::kUser;
  uint32_t target = 0;  // node or flow, depending on kind
  uint32_t arg0 = 0;
  uint32_t arg1 = 0;
};

// Time-ordered queue. Ties dispatch in insertion order.
class EventQueue {
 public:
  SimTime now() const { return now_; }
  bool empty() const { return heap_.empty(); }
  size_t size() const { return heap_.size(); }
  uint64_t dispatched() const { return dispatched_; }

  // Throws CausalityError for timestamps in the past.
  void Schedule(SimTime time, EventKind kind, uint32_t target,
                uint32_t arg0 = 0, uint32_t arg1 = 0) {
    if (time < now_) {
      throw CausalityError("event scheduled in the past");
    }
    heap_.push(Event{time, next_sequence_++, kind, target, arg0, arg1});
  }

  SimTime PeekTime() const { return heap_.top().time; }

  Event Pop() {
    Event e = heap_.top();
    heap_.pop();
    now_ = e.time;
    ++dispatched_;
    return e;
  }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.sequence > b.sequence;
    }
  };

  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  SimTime now_ = 0;
  uint64_t next_sequence_ = 0;
  uint64_t dispatched_ = 0;
};

}  // namespace irn

#endif  // IRN_EVENT_QUEUE_H_
