#pragma once

#include <chrono>
#include <cstdint>

namespace sesa::timing {

// Per-thread bookkeeping that lets tests prove feature extraction and
// pipeline transforms never execute inside a timed classification region.
struct GuardState {
  bool in_timed_region = false;
  std::uint64_t regions_entered = 0;
  std::uint64_t guard_violations = 0;
};

inline GuardState& state() {
  thread_local GuardState s;
  return s;
}

inline void reset() { state() = GuardState{}; }

// RAII marker around the code whose wall time is being measured.
class TimedRegion {
 public:
  TimedRegion() {
    state().in_timed_region = true;
    ++state().regions_entered;
  }
  ~TimedRegion() { state().in_timed_region = false; }
  TimedRegion(const TimedRegion&) = delete;
  TimedRegion& operator=(const TimedRegion&) = delete;
};

// Called by work that must never be timed; records a violation instead of
// aborting so production runs stay usable while tests can still detect it.
inline void assert_untimed() {
  if (state().in_timed_region) ++state().guard_violations;
}

using Clock = std::chrono::steady_clock;

inline double ms_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

}  // namespace sesa::timing
