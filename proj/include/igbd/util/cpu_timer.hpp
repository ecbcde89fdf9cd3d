#pragma once

#include <ctime>

namespace igbd {

// Process CPU time, matching how solver runtimes are usually reported.
class CpuTimer {
 public:
  CpuTimer() : start_(now()) {}
  void reset() { start_ = now(); }
  double seconds() const { return now() - start_; }

 private:
  static double now() {
    timespec ts{};
    clock_gettime(CLOCK_PROCESS_CPUTIME_ID, &ts);
    return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
  }
  double start_;
};

}  // namespace igbd
