#ifndef LEDSIM_SIM_TIME_H_
#define LEDSIM_SIM_TIME_H_

#include <compare>
#include <cstdint>
#include <limits>

namespace ledsim {

// Integer-microsecond simulation time. Used both for instants (microseconds
// since simulation start) and for intervals. All arithmetic is exact.
class SimTime {
 public:
  constexpr SimTime() = default;

  static constexpr SimTime Micros(std::int64_t us) { return SimTime(us); }
  static constexpr SimTime Millis(std::int64_t ms) { return SimTime(ms * 1000); }
  static constexpr SimTime Seconds(std::int64_t s) { return SimTime(s * 1000000); }
  static constexpr SimTime Zero() { return SimTime(0); }
  static constexpr SimTime Infinite() {
    return SimTime(std::numeric_limits<std::int64_t>::max());
  }

  constexpr std::int64_t us() const { return us_; }
  constexpr double seconds() const { return static_cast<double>(us_) / 1e6; }

  constexpr SimTime operator+(SimTime o) const { return SimTime(us_ + o.us_); }
  constexpr SimTime operator-(SimTime o) const { return SimTime(us_ - o.us_); }
  constexpr SimTime& operator+=(SimTime o) {
    us_ += o.us_;
    return *this;
  }
  constexpr auto operator<=>(const SimTime&) const = default;

 private:
  constexpr explicit SimTime(std::int64_t us) : us_(us) {}
  std::int64_t us_ = 0;
};

// Nearest whole microsecond to a time expressed in seconds.
SimTime SecondsToSimTime(double seconds);

}  // namespace ledsim

#endif  // LEDSIM_SIM_TIME_H_
