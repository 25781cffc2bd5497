#include "irn/congestion_control.h"

#include <algorithm>
#include <stdexcept>

namespace irn {

AimdCongestionControl::AimdCongestionControl(const CcParams& params,
                                             std::optional<uint32_t> initial)
    : max_cwnd_(std::max<uint32_t>(1, params.bdp_cap)),
      slow_start_(params.slow_start) {
  if (initial) {
    cwnd_ = std::clamp<uint32_t>(*initial, 1, max_cwnd_);
  } else {
    cwnd_ = slow_start_ ? 1 : max_cwnd_;
  }
  ssthresh_ = max_cwnd_;
}

void AimdCongestionControl::OnAck(uint32_t newly_acked) {
  for (uint32_t i = 0; i < newly_acked && cwnd_ < max_cwnd_; ++i) {
    if (slow_start_ && cwnd_ < ssthresh_) {
      ++cwnd_;
      continue;
    }
    if (++acked_in_window_ >= cwnd_) {
      acked_in_window_ = 0;
      ++cwnd_;
    }
  }
}

void AimdCongestionControl::OnLoss() {
  cwnd_ = std::max<uint32_t>(1, cwnd_ / 2);
  ssthresh_ = cwnd_;
  acked_in_window_ = 0;
}

CcRegistry& CcRegistry::Global() {
  static CcRegistry registry;
  return registry;
}

CcRegistry::CcRegistry() {
  Register("none", [](const CcParams&) {
    return std::make_unique<NoCongestionControl>();
  });
  Register("aimd", [](const CcParams& params) {
    return std::make_unique<AimdCongestionControl>(params);
  });
}

void CcRegistry::Register(const std::string& name, CcFactory factory) {
  factories_[name] = std::move(factory);
}

bool CcRegistry::Contains(const std::string& name) const {
  return factories_.contains(name);
}

std::unique_ptr<CongestionControl> CcRegistry::Create(
    const std::string& name, const CcParams& params) const {
  auto it = factories_.find(name);
  if (it == factories_.end()) {
    std::string known;
    for (const auto& [n, _] : factories_) known += (known.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown congestion control scheme '" + name +
                                "' (known: " + known + ")");
  }
  return it->second(params);
}

std::vector<std::string> CcRegistry::Names() const {
  std::vector<std::string> names;
  for (const auto& [n, _] : factories_) names.push_back(n);
  return names;
}

}  // namespace irn
