#ifndef LEDSIM_LEDBAT_H_
#define LEDSIM_LEDBAT_H_

#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <stdexcept>

#include "ledsim/sim_time.h"
#include "ledsim/transport.h"

namespace ledsim {

// Controller gain as an exact rational in 1/us.
struct Gain {
  std::int64_t num = 1;
  std::int64_t den_us = 25'000;
  bool operator==(const Gain&) const = default;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct LedbatConfig {
  std::int64_t target_us = 25'000;
  // Unset means GAIN = 1/TARGET.
  std::optional<Gain> explicit_gain;
  double min_cwnd_pkts = 1.0;
  double initial_cwnd_pkts = 1.0;
  bool pacing = true;
  bool slow_start = false;
  int base_histo_minutes = 10;
  // Sender clock offset. The receiver's offset lives on the Receiver.
  std::int64_t clock_offset_us = 0;
  // Fault injection: the delay estimator always reports an empty queue.
  bool pin_queuing_delay_zero = false;

  Gain gain() const { return explicit_gain.value_or(Gain{1, target_us}); }
  // Throws ConfigError.
  void Validate() const;
};

// Per-minute minima of the measured one-way delay over the last
// `minutes` minutes of simulation time. The base delay is the minimum over
// every slot still held.
class BaseDelayHistory {
 public:
  explicit BaseDelayHistory(int minutes, SimTime slot_width = SimTime::Seconds(60));

  void Update(std::int64_t measured_delay_us, SimTime now);
  std::optional<std::int64_t> base_delay_us() const;
  std::size_t slots() const { return slots_.size(); }

 private:
  struct Slot {
    std::int64_t index;
    std::int64_t min_delay_us;
  };
  int minutes_;
  SimTime slot_width_;
  std::deque<Slot> slots_;
};

// rtt / cwnd rounded to the nearest microsecond and at least 1 us when
// pacing; zero in batch mode or before any RTT sample.
SimTime PacingGap(double cwnd_pkts, SimTime rtt_est, bool paced);

// Linear delay-based controller with optional TCP slow-start.
class LedbatController : public WindowController {
 public:
  explicit LedbatController(LedbatConfig config);

  void OnAck(const AckSample& sample, SimTime now) override;
  bool OnLoss(const LossSignal& loss, SimTime now) override;
  double cwnd() const override { return cwnd_; }
  SimTime SendGap(SimTime rtt_est) const override;

  const LedbatConfig& config() const { return config_; }
  std::optional<std::int64_t> base_delay_us() const { return history_.base_delay_us(); }
  std::int64_t current_delay_us() const { return current_delay_us_; }
  std::int64_t queuing_delay_us() const { return queuing_delay_us_; }
  bool ss_active() const { return ss_active_; }
  double ssthresh() const { return ssthresh_; }
  const HalvingGate& halving() const { return gate_; }

  // Linear-controller acks whose increment exceeded 1/cwnd (should stay 0
  // with GAIN = 1/TARGET).
  std::uint64_t ramp_violations() const { return ramp_violations_; }
  std::uint64_t linear_acks() const { return linear_acks_; }
  // Acks where the base delay exceeded the current delay (never expected).
  std::uint64_t minimum_violations() const { return minimum_violations_; }

 private:
  LedbatConfig config_;
  Gain gain_;
  double cwnd_;
  double ssthresh_ = std::numeric_limits<double>::infinity();
  bool ss_active_;
  BaseDelayHistory history_;
  std::int64_t current_delay_us_ = 0;
  std::int64_t queuing_delay_us_ = 0;
  HalvingGate gate_;
  std::uint64_t ramp_violations_ = 0;
  std::uint64_t linear_acks_ = 0;
  std::uint64_t minimum_violations_ = 0;
};

}  // namespace ledsim

#endif  // LEDSIM_LEDBAT_H_
