#pragma once

#include <cstdint>

namespace vqtoken::flops {

// Thread-local floating-point operation counter. The numeric kernels call
// add() at their dominant inner loops (one multiply-add = 2 flops, exp/sqrt
// = 1). Disabled it costs a branch; instrumented runs are single-threaded.

inline thread_local bool enabled = false;
inline thread_local std::uint64_t counter = 0;

inline void add(std::uint64_t n) {
  if (enabled) counter += n;
}

/// RAII scope that enables and zeroes the counter, restoring on exit.
class Scope {
 public:
  Scope() : prev_enabled_(enabled), prev_count_(counter) {
    enabled = true;
    counter = 0;
  }
  ~Scope() {
    captured_ = counter;
    enabled = prev_enabled_;
    counter = prev_count_;
  }
  Scope(const Scope&) = delete;
  Scope& operator=(const Scope&) = delete;

  /// Flops recorded so far inside this scope.
  std::uint64_t count() const { return counter; }

 private:
  bool prev_enabled_;
  std::uint64_t prev_count_;
  std::uint64_t captured_ = 0;
};

}  // namespace vqtoken::flops
