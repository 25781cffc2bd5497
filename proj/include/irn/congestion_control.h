#ifndef IRN_CONGESTION_CONTROL_H_
#define IRN_CONGESTION_CONTROL_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace irn {

struct CcParams {
  // Window ceiling; BDP-FC's cap when that is enabled.
  uint32_t bdp_cap = 120;
  bool slow_start = false;
};

// Per-QP congestion control plug-in. Window schemes gate new packets on the
// in-flight count; rate schemes may in addition ask the host to pace.
class CongestionControl {
 public:
  virtual ~CongestionControl() = default;

  virtual bool AllowSend(uint32_t in_flight) const = 0;
  virtual void OnAck(uint32_t newly_acked) = 0;
  // Loss signal: recovery entry on NACK, or a timeout.
  virtual void OnLoss() = 0;
  // Pacing rate in bits/s, if the scheme is rate based.
  virtual std::optional<double> PacingRate() const { return std::nullopt; }
  virtual std::string_view name() const = 0;
};

class NoCongestionControl final : public CongestionControl {
 public:
  bool AllowSend(uint32_t) const override { return true; }
  void OnAck(uint32_t) override {}
  void OnLoss() override {}
  std::string_view name() const override { return "none"; }
};

// TCP-style AIMD window: +1 packet per window's worth of acks, halve on
// loss. Starts at the window ceiling (line rate) unless slow start is on.
class AimdCongestionControl final : public CongestionControl {
 public:
  explicit AimdCongestionControl(const CcParams& params,
                                 std::optional<uint32_t> initial_cwnd = {});

  bool AllowSend(uint32_t in_flight) const override {
    return in_flight < EffectiveWindow();
  }
  void OnAck(uint32_t newly_acked) override;
  void OnLoss() override;
  std::string_view name() const override { return "aimd"; }

  uint32_t cwnd() const { return cwnd_; }
  uint32_t ssthresh() const { return ssthresh_; }
  uint32_t EffectiveWindow() const { return cwnd_; }

 private:
  uint32_t max_cwnd_;
  uint32_t cwnd_;  // always in [1, max_cwnd_]
  uint32_t ssthresh_;
  uint32_t acked_in_window_ = 0;
  bool slow_start_;
};

using CcFactory =
    std::function<std::unique_ptr<CongestionControl>(const CcParams&)>;

// Maps scheme names from experiment configs to factories. "none" and "aimd"
// are always present; other schemes (DCQCN, Timely) plug in here.
class CcRegistry {
 public:
  static CcRegistry& Global();

  CcRegistry();
  void Register(const std::string& name, CcFactory factory);
  bool Contains(const std::string& name) const;
  // Throws std::invalid_argument for unknown schemes.
  std::unique_ptr<CongestionControl> Create(const std::string& name,
                                            const CcParams& params) const;
  std::vector<std::string> Names() const;

 private:
  std::map<std::string, CcFactory> factories_;
};

}  // namespace irn

#endif  // IRN_CONGESTION_CONTROL_H_
